"""Algebra lineare esatta sui reticoli interi.

Tutte le quozienti, saturazioni e proiezioni del progetto passano di qui.
Convenzione unica: gli elementi di un reticolo sono vettori riga e gli
omomorfismi agiscono per moltiplicazione a destra (``v · A``).

Le matrici di lavoro sono array numpy con ``dtype=object``: gli interi
restano quelli di Python, quindi a precisione arbitraria.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from operator import index
from typing import Iterable, List, Optional, Sequence, Tuple

import numpy as np

LOGGER = logging.getLogger(__name__)

Vector = Tuple[int, ...]


@dataclass(frozen=True)
class IntMatrix:
    """Matrice intera immutabile (righe = vettori del reticolo)."""

    entries: Tuple[Tuple[int, ...], ...]
    cols: int

    def __post_init__(self) -> None:
        if self.cols < 0:
            raise ValueError('Numero di colonne negativo.')
        for row in self.entries:
            if len(row) != self.cols:
                raise ValueError('La matrice non è rettangolare.')

    @classmethod
    def from_rows(cls, rows: Iterable[Sequence[int]], cols: Optional[int] = None) -> 'IntMatrix':
        converted = tuple(tuple(index(value) for value in row) for row in rows)
        if cols is None:
            cols = len(converted[0]) if converted else 0
        return cls(converted, cols)

    @classmethod
    def from_array(cls, array: np.ndarray) -> 'IntMatrix':
        rows, cols = array.shape
        return cls(tuple(tuple(int(array[i, j]) for j in range(cols)) for i in range(rows)), cols)

    @classmethod
    def identity(cls, size: int) -> 'IntMatrix':
        return cls(tuple(tuple(1 if i == j else 0 for j in range(size)) for i in range(size)), size)

    @classmethod
    def zeros(cls, rows: int, cols: int) -> 'IntMatrix':
        return cls(tuple((0,) * cols for _ in range(rows)), cols)

    @property
    def rows(self) -> int:
        return len(self.entries)

    @property
    def shape(self) -> Tuple[int, int]:
        return self.rows, self.cols

    def to_array(self) -> np.ndarray:
        array = np.empty((self.rows, self.cols), dtype=object)
        for i, row in enumerate(self.entries):
            for j, value in enumerate(row):
                array[i, j] = value
        return array

    def row(self, i: int) -> Vector:
        return self.entries[i]

    def column(self, j: int) -> Vector:
        return tuple(row[j] for row in self.entries)

    def transpose(self) -> 'IntMatrix':
        return IntMatrix(tuple(self.column(j) for j in range(self.cols)), self.rows)

    def __matmul__(self, other: 'IntMatrix') -> 'IntMatrix':
        if self.cols != other.rows:
            raise ValueError(f'Dimensioni incompatibili: {self.shape} @ {other.shape}.')
        columns = [other.column(j) for j in range(other.cols)]
        return IntMatrix(
            tuple(tuple(sum(a * b for a, b in zip(row, col)) for col in columns) for row in self.entries),
            other.cols,
        )

    def apply(self, vector: Sequence[int]) -> Vector:
        """Restituisce ``vector · self``."""
        if len(vector) != self.rows:
            raise ValueError(
                f'Il vettore ha {len(vector)} componenti, la matrice {self.rows} righe.'
            )
        return tuple(sum(v * row[j] for v, row in zip(vector, self.entries)) for j in range(self.cols))

    def stack(self, other: 'IntMatrix') -> 'IntMatrix':
        if self.rows and other.rows and self.cols != other.cols:
            raise ValueError('Impossibile impilare matrici con colonne diverse.')
        cols = self.cols if self.rows else other.cols
        return IntMatrix(self.entries + other.entries, cols)

    def select_rows(self, indices: Iterable[int]) -> 'IntMatrix':
        return IntMatrix(tuple(self.entries[i] for i in indices), self.cols)

    def is_zero(self) -> bool:
        return all(value == 0 for row in self.entries for value in row)

    def diagonal(self) -> Vector:
        return tuple(self.entries[i][i] for i in range(min(self.rows, self.cols)))


def as_matrix(vectors, cols: Optional[int] = None) -> IntMatrix:
    """Accetta una ``IntMatrix`` o una sequenza di vettori riga."""
    if isinstance(vectors, IntMatrix):
        if cols is not None and vectors.rows and vectors.cols != cols:
            raise ValueError(f'Attese {cols} colonne, trovate {vectors.cols}.')
        if cols is not None and not vectors.rows:
            return IntMatrix((), cols)
        return vectors
    matrix = IntMatrix.from_rows(vectors, cols)
    if cols is not None and matrix.cols != cols:
        raise ValueError(f'Attese {cols} colonne, trovate {matrix.cols}.')
    return matrix


@dataclass(frozen=True)
class SmithDecomposition:
    """``U · A · V = S`` con ``U``, ``V`` unimodulari e ``S`` diagonale."""

    U: IntMatrix
    S: IntMatrix
    V: IntMatrix
    invariant_factors: Vector
    V_inverse: IntMatrix

    @property
    def rank(self) -> int:
        return sum(1 for d in self.invariant_factors if d != 0)


def _eye(size: int) -> np.ndarray:
    array = np.empty((size, size), dtype=object)
    for i in range(size):
        for j in range(size):
            array[i, j] = 1 if i == j else 0
    return array


def _swap_rows(D: np.ndarray, U: np.ndarray, a: int, b: int) -> None:
    if a != b:
        D[[a, b]] = D[[b, a]]
        U[[a, b]] = U[[b, a]]


def _swap_cols(D: np.ndarray, V: np.ndarray, V_inv: np.ndarray, a: int, b: int) -> None:
    if a != b:
        D[:, [a, b]] = D[:, [b, a]]
        V[:, [a, b]] = V[:, [b, a]]
        V_inv[[a, b]] = V_inv[[b, a]]


def _add_row(D: np.ndarray, U: np.ndarray, target: int, source: int, factor: int) -> None:
    D[target] = D[target] + factor * D[source]
    U[target] = U[target] + factor * U[source]


def _add_col(D: np.ndarray, V: np.ndarray, V_inv: np.ndarray, target: int, source: int, factor: int) -> None:
    D[:, target] = D[:, target] + factor * D[:, source]
    V[:, target] = V[:, target] + factor * V[:, source]
    # V_inv viene moltiplicata a sinistra per l'inversa dell'operazione elementare
    V_inv[source] = V_inv[source] - factor * V_inv[target]


def _smallest_nonzero(D: np.ndarray, start: int) -> Optional[Tuple[int, int]]:
    best = None
    rows, cols = D.shape
    for i in range(start, rows):
        for j in range(start, cols):
            value = D[i, j]
            if value != 0 and (best is None or abs(value) < abs(D[best])):
                best = (i, j)
    return best


def _non_divisible(D: np.ndarray, t: int) -> Optional[Tuple[int, int]]:
    rows, cols = D.shape
    pivot = D[t, t]
    for i in range(t + 1, rows):
        for j in range(t + 1, cols):
            if D[i, j] % pivot != 0:
                return i, j
    return None


def snf(A) -> SmithDecomposition:
    """Forma normale di Smith con le matrici di trasformazione.

    I fattori invarianti sono ``min(righe, colonne)`` interi non negativi,
    ciascuno divide il successivo e gli zeri stanno in fondo.
    """
    A = as_matrix(A)
    m, n = A.shape
    D = A.to_array()
    U = _eye(m)
    V = _eye(n)
    V_inv = _eye(n)

    t = 0
    while t < min(m, n):
        pivot = _smallest_nonzero(D, t)
        if pivot is None:
            break
        _swap_rows(D, U, t, pivot[0])
        _swap_cols(D, V, V_inv, t, pivot[1])
        while True:
            clean = True
            for i in range(t + 1, m):
                if D[i, t] != 0:
                    _add_row(D, U, i, t, -(D[i, t] // D[t, t]))
                    clean = clean and D[i, t] == 0
            for j in range(t + 1, n):
                if D[t, j] != 0:
                    _add_col(D, V, V_inv, j, t, -(D[t, j] // D[t, t]))
                    clean = clean and D[t, j] == 0
            if not clean:
                # porta in posizione di pivot il resto più piccolo
                candidates = [(i, t) for i in range(t, m) if D[i, t] != 0]
                candidates += [(t, j) for j in range(t, n) if D[t, j] != 0]
                i, j = min(candidates, key=lambda cell: abs(D[cell]))
                _swap_rows(D, U, t, i)
                _swap_cols(D, V, V_inv, t, j)
                continue
            bad = _non_divisible(D, t)
            if bad is None:
                break
            _add_row(D, U, t, bad[0], 1)
        if D[t, t] < 0:
            D[t] = -D[t]
            U[t] = -U[t]
        t += 1

    S = IntMatrix.from_array(D)
    return SmithDecomposition(
        U=IntMatrix.from_array(U),
        S=S,
        V=IntMatrix.from_array(V),
        invariant_factors=S.diagonal(),
        V_inverse=IntMatrix.from_array(V_inv),
    )


def hermite_normal_form(vectors, cols: Optional[int] = None) -> IntMatrix:
    """Base a scala (forma di Hermite per righe) del reticolo generato.

    Pivot positivi, elementi sopra ciascun pivot ridotti in ``[0, pivot)``,
    righe nulle eliminate: due insiemi di generatori dello stesso reticolo
    danno la stessa matrice.
    """
    matrix = as_matrix(vectors, cols)
    n = matrix.cols
    rows: List[List[int]] = [list(row) for row in matrix.entries if any(row)]
    pivot_row = 0
    for col in range(n):
        if pivot_row >= len(rows):
            break
        found = False
        while True:
            nonzero = [i for i in range(pivot_row, len(rows)) if rows[i][col] != 0]
            if not nonzero:
                break
            found = True
            k = min(nonzero, key=lambda i: abs(rows[i][col]))
            rows[pivot_row], rows[k] = rows[k], rows[pivot_row]
            p = rows[pivot_row][col]
            residual = False
            for i in range(pivot_row + 1, len(rows)):
                if rows[i][col] != 0:
                    q = rows[i][col] // p
                    rows[i] = [a - q * b for a, b in zip(rows[i], rows[pivot_row])]
                    residual = residual or rows[i][col] != 0
            if not residual:
                break
        if not found:
            continue
        if rows[pivot_row][col] < 0:
            rows[pivot_row] = [-a for a in rows[pivot_row]]
        p = rows[pivot_row][col]
        for i in range(pivot_row):
            q = rows[i][col] // p
            if q:
                rows[i] = [a - q * b for a, b in zip(rows[i], rows[pivot_row])]
        pivot_row += 1
    return IntMatrix.from_rows(rows[:pivot_row], n)


def matrix_rank(vectors, cols: Optional[int] = None) -> int:
    return hermite_normal_form(vectors, cols).rows


def saturate(vectors, cols: Optional[int] = None) -> IntMatrix:
    """Base (in forma di Hermite) di ``span_Q(L) ∩ Z^n``."""
    L = as_matrix(vectors, cols)
    if not L.rows:
        return IntMatrix((), L.cols)
    decomposition = snf(L)
    basis = decomposition.V_inverse.select_rows(range(decomposition.rank))
    return hermite_normal_form(basis, L.cols)


def saturation_index(vectors, cols: Optional[int] = None) -> int:
    """Indice del reticolo generato dentro la sua saturazione."""
    L = as_matrix(vectors, cols)
    if not L.rows:
        return 1
    product = 1
    for d in snf(L).invariant_factors:
        if d:
            product *= d
    return product


def lattice_index(vectors, ambient_rank: int) -> int:
    """Indice ``[Z^n : L]`` di un sottoreticolo di rango pieno."""
    L = as_matrix(vectors, ambient_rank)
    if ambient_rank == 0:
        return 1
    if not L.rows:
        raise ValueError('Il sottoreticolo nullo non ha indice finito.')
    factors = snf(L).invariant_factors
    if len(factors) < ambient_rank or any(d == 0 for d in factors):
        raise ValueError('Il sottoreticolo non ha rango pieno: indice infinito.')
    product = 1
    for d in factors:
        product *= d
    return product


def left_kernel(A, cols: Optional[int] = None) -> IntMatrix:
    """Base intera di ``{z : z · A = 0}``."""
    A = as_matrix(A, cols)
    if not A.rows:
        return IntMatrix((), 0)
    decomposition = snf(A)
    kernel = decomposition.U.select_rows(range(decomposition.rank, A.rows))
    return hermite_normal_form(kernel, A.rows)


def in_rational_span(vector: Sequence[int], vectors, cols: Optional[int] = None) -> bool:
    L = as_matrix(vectors, cols if cols is not None else len(vector))
    return matrix_rank(L.stack(IntMatrix.from_rows([vector], len(vector)))) == matrix_rank(L)


def sublattices_equal(first, second, cols: Optional[int] = None) -> bool:
    return hermite_normal_form(first, cols) == hermite_normal_form(second, cols)


@dataclass(frozen=True)
class QuotientPresentation:
    """Presentazione di ``Z^n / L`` come ``Z^free ⊕ ⊕ Z/d_i``.

    ``projection`` ha ``n`` righe: le prime ``free_rank`` colonne danno le
    coordinate libere, le altre quelle di torsione (da ridurre modulo i
    fattori). ``section`` solleva le coordinate libere in ``Z^n``.
    """

    ambient_rank: int
    free_rank: int
    torsion: Vector
    projection: IntMatrix
    section: IntMatrix
    torsion_section: IntMatrix

    @property
    def is_trivial(self) -> bool:
        return self.free_rank == 0 and not self.torsion

    @property
    def order(self) -> Optional[int]:
        """Cardinalità del gruppo, ``None`` se infinito."""
        if self.free_rank:
            return None
        product = 1
        for d in self.torsion:
            product *= d
        return product

    def project(self, vector: Sequence[int]) -> Vector:
        return project(self, vector)

    def lift(self, coordinates: Sequence[int]) -> Vector:
        if len(coordinates) != self.free_rank + len(self.torsion):
            raise ValueError('Numero di coordinate incompatibile con la presentazione.')
        free = self.section.apply(coordinates[:self.free_rank]) if self.free_rank else (0,) * self.ambient_rank
        if not self.torsion:
            return free
        torsion = self.torsion_section.apply(coordinates[self.free_rank:])
        return tuple(a + b for a, b in zip(free, torsion))


def quotient_presentation(ambient_rank: int, vectors) -> QuotientPresentation:
    """Coordinate canoniche del quoziente ``Z^ambient_rank / L``.

    Le coordinate dipendono solo dal reticolo generato: i generatori vengono
    prima ridotti in forma di Hermite e poi diagonalizzati.
    """
    if ambient_rank < 0:
        raise ValueError('Rango ambiente negativo.')
    basis = hermite_normal_form(as_matrix(vectors, ambient_rank), ambient_rank)
    if basis.rows:
        decomposition = snf(basis)
        V, V_inv = decomposition.V, decomposition.V_inverse
        factors = decomposition.invariant_factors
        rank = decomposition.rank
    else:
        V = V_inv = IntMatrix.identity(ambient_rank)
        factors = ()
        rank = 0

    free_columns = list(range(rank, ambient_rank))
    torsion_indices = [i for i in range(rank) if factors[i] > 1]
    columns = [V.column(j) for j in free_columns] + [V.column(i) for i in torsion_indices]
    if columns:
        projection = IntMatrix.from_rows(zip(*columns), len(columns))
    else:
        projection = IntMatrix.zeros(ambient_rank, 0)
    return QuotientPresentation(
        ambient_rank=ambient_rank,
        free_rank=len(free_columns),
        torsion=tuple(factors[i] for i in torsion_indices),
        projection=projection,
        section=V_inv.select_rows(free_columns),
        torsion_section=V_inv.select_rows(torsion_indices),
    )


def project(presentation: QuotientPresentation, vector: Sequence[int]) -> Vector:
    """Classe di ``vector`` nelle coordinate canoniche del quoziente."""
    if len(vector) != presentation.ambient_rank:
        raise ValueError(
            f'Il vettore ha {len(vector)} componenti, atteso rango {presentation.ambient_rank}.'
        )
    coordinates = presentation.projection.apply(vector) if presentation.ambient_rank else ()
    if not coordinates:
        return ()
    free = coordinates[:presentation.free_rank]
    torsion = tuple(c % d for c, d in zip(coordinates[presentation.free_rank:], presentation.torsion))
    return tuple(free) + torsion


__all__ = [
    'IntMatrix',
    'QuotientPresentation',
    'SmithDecomposition',
    'Vector',
    'as_matrix',
    'hermite_normal_form',
    'in_rational_span',
    'lattice_index',
    'left_kernel',
    'matrix_rank',
    'project',
    'quotient_presentation',
    'saturate',
    'saturation_index',
    'snf',
    'sublattices_equal',
]
