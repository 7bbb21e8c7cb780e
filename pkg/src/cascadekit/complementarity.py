"""Pairwise complementarity of model correctness sets and the all-pairs matrix.

complementarity(a, b) = (n(a or b) - n(a and b) - |n(a) - n(b)|) / N over the
N samples of an id-aligned pair: high when the two models are correct on
mostly disjoint, similarly sized parts of the dataset.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

from .errors import DataError
from .records import PairedDataset, PredictionRecord, align_records


def predicted_label(logits: Sequence[float]) -> int:
    """Index of the maximum logit; ties resolve to the lowest index."""
    best = 0
    for i in range(1, len(logits)):
        if logits[i] > logits[best]:
            best = i
    return best


def correctness_vectors(paired: PairedDataset) -> tuple[list[bool], list[bool]]:
    """Per-sample correctness of models A and B, in dataset order."""
    correct_a = []
    correct_b = []
    for s in paired.samples:
        correct_a.append(predicted_label(s.logits_a) == s.label)
        correct_b.append(predicted_label(s.logits_b) == s.label)
    return correct_a, correct_b


def complementarity_of_vectors(correct_a: Sequence[bool], correct_b: Sequence[bool]) -> float:
    """Complementarity from two correctness vectors of equal length.

    The numerator is computed in exact integer arithmetic; the single
    division by N happens last.
    """
    if len(correct_a) != len(correct_b):
        raise DataError("correctness vectors must have equal length")
    n = len(correct_a)
    if n == 0:
        raise DataError("complementarity of an empty dataset is undefined")
    n_union = 0
    n_inter = 0
    n_a = 0
    n_b = 0
    for ca, cb in zip(correct_a, correct_b):
        if ca or cb:
            n_union += 1
        if ca and cb:
            n_inter += 1
        if ca:
            n_a += 1
        if cb:
            n_b += 1
    return (n_union - n_inter - abs(n_a - n_b)) / n


def complementarity(paired: PairedDataset) -> float:
    """Complementarity score of an aligned model pair."""
    correct_a, correct_b = correctness_vectors(paired)
    return complementarity_of_vectors(correct_a, correct_b)


@dataclass
class ComplementarityMatrix:
    """Symmetric all-pairs complementarity; diagonal is exactly 0."""

    names: list[str]
    values: list[list[float]]

    def best_pair(self) -> tuple[int, int]:
        """Indices (i, j), i < j, of the maximum off-diagonal entry; ties
        break to the lexicographically smallest name pair."""
        if len(self.names) < 2:
            raise DataError("need at least 2 models to pick a pair")
        best: tuple[int, int] | None = None
        best_value = float("-inf")
        best_names: tuple[str, str] | None = None
        for i in range(len(self.names)):
            for j in range(i + 1, len(self.names)):
                value = self.values[i][j]
                pair_names = tuple(sorted((self.names[i], self.names[j])))
                if best is None or value > best_value or (
                    value == best_value and pair_names < best_names
                ):
                    best = (i, j)
                    best_value = value
                    best_names = pair_names
        assert best is not None
        return best


def complementarity_matrix(
    models: list[list[PredictionRecord]], names: list[str] | None = None
) -> ComplementarityMatrix:
    """All-pairs complementarity over >= 2 models' record lists.

    Alignment failures are reported with the offending pair's names.
    """
    if len(models) < 2:
        raise DataError("need at least 2 models")
    if names is None:
        names = [f"model_{i}" for i in range(len(models))]
    if len(names) != len(models):
        raise DataError("names and models must have equal length")
    m = len(models)
    values = [[0.0] * m for _ in range(m)]
    for i in range(m):
        for j in range(i + 1, m):
            try:
                paired = align_records(models[i], models[j])
            except DataError as exc:
                raise DataError(f"pair ({names[i]}, {names[j]}): {exc}") from None
            value = complementarity(paired)
            values[i][j] = value
            values[j][i] = value
    return ComplementarityMatrix(list(names), values)


def pick_best_pair(matrix: ComplementarityMatrix) -> tuple[int, int]:
    return matrix.best_pair()


def format_matrix_csv(matrix: ComplementarityMatrix) -> str:
    """CSV with a header row of model names and unscaled 6-decimal values."""
    lines = ["model," + ",".join(matrix.names)]
    for name, row in zip(matrix.names, matrix.values):
        lines.append(name + "," + ",".join(f"{v:.6f}" for v in row))
    return "\n".join(lines) + "\n"
