"""Parser for a restricted SMILES grammar producing heavy-atom graphs.

Supported: organic-subset atoms (B C N O P S F Cl Br I), aromatic lowercase
atoms (b c n o p s), bonds ``- = # :``, branches, and ring closures ``0-9``
and ``%NN``. Bracket atoms, charges, stereo markers and dot-disconnected
fragments are rejected with the offending byte offset.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

from .errors import (
    BondConflict,
    DanglingRingBond,
    UnbalancedBranch,
    UnexpectedCharacter,
    UnknownAtom,
    UnsupportedFeature,
)
from .graph import DEFAULT_ALPHABET, AtomAlphabet, MolecularGraph, build_graph

ORGANIC = ("Cl", "Br", "B", "C", "N", "O", "P", "S", "F", "I")
AROMATIC = {"b": "B", "c": "C", "n": "N", "o": "O", "p": "P", "s": "S"}
BONDS = {"-": 1.0, "=": 2.0, "#": 3.0, ":": 1.5}
UNSUPPORTED = {
    "@": "stereo marker '@'",
    "/": "directional bond '/'",
    "\\": "directional bond '\\'",
    "[": "bracket atom",
    "]": "bracket atom",
    "+": "charge",
    ".": "disconnected fragment '.'",
    "*": "wildcard atom",
    "$": "quadruple bond",
}


class TokenKind(enum.Enum):
    ATOM = "atom"
    AROMATIC_ATOM = "aromatic"
    BOND = "bond"
    BRANCH_OPEN = "("
    BRANCH_CLOSE = ")"
    RING_BOND = "ring"


@dataclass(frozen=True)
class SmilesToken:
    kind: TokenKind
    value: str | int | None
    pos: int


def tokenize(s: str | bytes) -> list[SmilesToken]:
    if isinstance(s, (bytes, bytearray)):
        s = bytes(s).decode("latin-1")
    tokens: list[SmilesToken] = []
    i = 0
    n = len(s)
    while i < n:
        ch = s[i]
        if ord(ch) > 127:
            raise UnexpectedCharacter(f"non-ASCII character {ch!r}", i)
        two = s[i : i + 2]
        if two in ("Cl", "Br"):
            tokens.append(SmilesToken(TokenKind.ATOM, two, i))
            i += 2
            continue
        if ch in ORGANIC:
            tokens.append(SmilesToken(TokenKind.ATOM, ch, i))
        elif ch in AROMATIC:
            tokens.append(SmilesToken(TokenKind.AROMATIC_ATOM, ch, i))
        elif ch in BONDS:
            tokens.append(SmilesToken(TokenKind.BOND, ch, i))
        elif ch == "(":
            tokens.append(SmilesToken(TokenKind.BRANCH_OPEN, None, i))
        elif ch == ")":
            tokens.append(SmilesToken(TokenKind.BRANCH_CLOSE, None, i))
        elif ch.isdigit():
            tokens.append(SmilesToken(TokenKind.RING_BOND, int(ch), i))
        elif ch == "%":
            digits = s[i + 1 : i + 3]
            if len(digits) != 2 or not digits.isdigit():
                raise UnexpectedCharacter("'%' must be followed by two digits", i)
            tokens.append(SmilesToken(TokenKind.RING_BOND, int(digits), i))
            i += 3
            continue
        elif ch in UNSUPPORTED:
            raise UnsupportedFeature(f"unsupported {UNSUPPORTED[ch]}", i)
        else:
            raise UnexpectedCharacter(f"unexpected character {ch!r}", i)
        i += 1
    return tokens


def parse_smiles(
    s: str | bytes, alphabet: AtomAlphabet = DEFAULT_ALPHABET, id: str | None = None
) -> MolecularGraph:
    """Parse ``s`` into a hydrogen-suppressed graph labelled over ``alphabet``.

    >>> parse_smiles("CC(=O)O").degrees().tolist()
    [1, 3, 1, 1]
    """
    tokens = tokenize(s)
    if not tokens:
        raise UnexpectedCharacter("empty SMILES", 0)

    labels: list[int] = []
    aromatic: list[bool] = []
    bonds: dict[tuple[int, int], float] = {}
    prev: int | None = None
    pending: SmilesToken | None = None
    branches: list[tuple[int, int]] = []  # (atom, position of '(')
    rings: dict[int, tuple[int, SmilesToken | None, int]] = {}

    def add_bond(u: int, v: int, order: float | None, pos: int) -> None:
        key = (min(u, v), max(u, v))
        if u == v:
            raise BondConflict("ring closure bonds an atom to itself", pos)
        if key in bonds:
            raise BondConflict(f"duplicate bond between atoms {u} and {v}", pos)
        if order is None:
            order = 1.5 if aromatic[u] and aromatic[v] else 1.0
        bonds[key] = order

    for k, tok in enumerate(tokens):
        if tok.kind in (TokenKind.ATOM, TokenKind.AROMATIC_ATOM):
            symbol = tok.value if tok.kind is TokenKind.ATOM else AROMATIC[tok.value]
            if symbol not in alphabet.symbols:
                raise UnknownAtom(f"atom {symbol!r} not in alphabet", tok.pos)
            labels.append(alphabet.symbols.index(symbol))
            aromatic.append(tok.kind is TokenKind.AROMATIC_ATOM)
            atom = len(labels) - 1
            if prev is not None:
                add_bond(prev, atom, BONDS[pending.value] if pending else None, tok.pos)
            elif pending is not None:
                raise UnexpectedCharacter("bond with no preceding atom", pending.pos)
            pending = None
            prev = atom
        elif tok.kind is TokenKind.BOND:
            if pending is not None:
                raise UnexpectedCharacter("two consecutive bond symbols", tok.pos)
            if prev is None:
                raise UnexpectedCharacter("bond with no preceding atom", tok.pos)
            pending = tok
        elif tok.kind is TokenKind.BRANCH_OPEN:
            if prev is None:
                raise UnbalancedBranch("branch opened before any atom", tok.pos)
            if pending is not None:
                raise UnexpectedCharacter("bond symbol before '('", pending.pos)
            nxt = tokens[k + 1] if k + 1 < len(tokens) else None
            if nxt is None or nxt.kind is TokenKind.BRANCH_CLOSE:
                raise UnbalancedBranch("empty branch", tok.pos)
            branches.append((prev, tok.pos))
        elif tok.kind is TokenKind.BRANCH_CLOSE:
            if not branches:
                raise UnbalancedBranch("')' without matching '('", tok.pos)
            if pending is not None:
                raise UnexpectedCharacter("bond symbol before ')'", pending.pos)
            prev = branches.pop()[0]
        else:  # ring bond
            if prev is None:
                raise DanglingRingBond("ring bond before any atom", tok.pos)
            digit = tok.value
            if digit in rings:
                other, open_bond, _ = rings.pop(digit)
                a = BONDS[open_bond.value] if open_bond else None
                b = BONDS[pending.value] if pending else None
                if a is not None and b is not None and a != b:
                    raise BondConflict(f"ring closure {digit} has conflicting bond orders", tok.pos)
                add_bond(other, prev, a if a is not None else b, tok.pos)
            else:
                rings[digit] = (prev, pending, tok.pos)
            pending = None

    if pending is not None:
        raise UnexpectedCharacter("dangling bond symbol at end of input", pending.pos)
    if branches:
        raise UnbalancedBranch("unclosed '('", branches[-1][1])
    if rings:
        digit, (_, _, pos) = min(rings.items(), key=lambda kv: kv[1][2])
        raise DanglingRingBond(f"ring bond {digit} never closed", pos)

    return build_graph(bonds.keys(), labels, alphabet, bond_orders=bonds, id=id)
