"""Exception hierarchy shared across grassy modules."""


class GrassyError(Exception):
    """Base class for every error raised by this package."""


# graph_core
class GraphError(GrassyError, ValueError):
    pass


class OutOfRangeNode(GraphError):
    pass


class SelfLoop(GraphError):
    pass


class UnknownLabel(GraphError):
    pass


class GraphTooLarge(GraphError):
    pass


class InvalidPermutation(GraphError):
    pass


class DimensionMismatch(GrassyError, ValueError):
    pass


# smiles_parser
class SmilesError(GrassyError, ValueError):
    """Parse failure carrying the byte offset where it was detected."""

    def __init__(self, message: str, position: int):
        super().__init__(f"{message} at offset {position}")
        self.position = position


class UnexpectedCharacter(SmilesError):
    pass


class UnsupportedFeature(UnexpectedCharacter):
    """Valid SMILES syntax outside the supported subset (stereo, brackets, charges)."""


class UnbalancedBranch(SmilesError):
    pass


class DanglingRingBond(SmilesError):
    pass


class UnknownAtom(SmilesError):
    pass


class BondConflict(SmilesError):
    pass


# scattering
class NotRowStochastic(GrassyError, ValueError):
    pass


class BankGraphMismatch(GrassyError, ValueError):
    pass


class FeaturizationError(GrassyError):
    def __init__(self, graph_id, cause: Exception):
        super().__init__(f"graph {graph_id!r}: {cause}")
        self.graph_id = graph_id
        self.cause = cause


# autodiff
class ShapeMismatch(GrassyError, ValueError):
    pass


class NonScalarLoss(GrassyError, ValueError):
    pass


class BlobFormatError(GrassyError, ValueError):
    pass


# models
class EmptyBatch(GrassyError, ValueError):
    pass


class MissingProperty(GrassyError, KeyError):
    def __init__(self, name: str, graph_id):
        super().__init__(f"property {name!r} missing for graph {graph_id!r}")
        self.name = name
        self.graph_id = graph_id

    def __str__(self) -> str:
        return self.args[0]


class NotVariational(GrassyError, ValueError):
    pass


class DatasetTooSmall(GrassyError, ValueError):
    pass


class AlphaOutOfRange(GrassyError, ValueError):
    pass


# validity / metrics
class EmptySampleSet(GrassyError, ValueError):
    pass


class EmptyTestSet(GrassyError, ValueError):
    pass


class TooFewPoints(GrassyError, ValueError):
    pass


class ZeroPropertyVector(GrassyError, ValueError):
    pass


# pipeline
class ConfigInvalid(GrassyError, ValueError):
    pass


class DatasetUnreadable(GrassyError, OSError):
    pass


class MissingPrerequisite(GrassyError):
    pass
