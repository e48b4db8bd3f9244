"""Reference-path repository: enrolled approach trajectories per verifier,
medoid selection, and threshold-state updates on explicit confirmation."""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field

import numpy as np

from . import trajectory
from .alignment import nw_score, nw_score_many, pairwise_matrix
from .errors import CorruptFile, EmptySequence, NoReferencePath, VersionMismatch
from .pathmodel import fit_markov, sample_paths_matching
from .thresholds import ThresholdState, initial_threshold, local_threshold
from .trajectory import PrimitiveSequence

REPO_VERSION = 1
BETWEEN_SAMPLE_COUNT = 200  # Markov-generated paths per local-threshold update


def _prepare(sequence: PrimitiveSequence, length_min: float) -> PrimitiveSequence:
    cleaned = trajectory.strip_stationary(
        trajectory.trim_to_duration(sequence, length_min * 60.0)
    )
    if len(cleaned) == 0:
        raise EmptySequence("sequence is empty after stripping and trimming")
    return cleaned


def _verifier_seed(verifier_id: str) -> int:
    digest = hashlib.sha256(verifier_id.encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "big")


@dataclass
class ReferencePath:
    verifier_id: str
    length_min: float
    instances: list[PrimitiveSequence]
    medoid_index: int
    threshold_state: ThresholdState

    @property
    def medoid(self) -> PrimitiveSequence:
        return self.instances[self.medoid_index]

    def verify(self, candidate: PrimitiveSequence) -> tuple[bool, int]:
        """Score a candidate against the medoid only; accept iff the score
        strictly exceeds the mixed threshold."""
        cleaned = trajectory.strip_stationary(
            trajectory.trim_to_duration(candidate, self.length_min * 60.0)
        ) if len(candidate) else candidate
        score = nw_score(cleaned, self.medoid)
        return score > self.threshold_state.d, score


def select_medoid(instances, matrix=None) -> int:
    """Index of the instance with the largest summed similarity to the
    others; ties resolve to the lowest index."""
    if len(instances) == 0:
        raise EmptySequence("no instances to select a medoid from")
    if matrix is None:
        matrix = pairwise_matrix(instances)
    matrix = np.asarray(matrix)
    sums = matrix.sum(axis=1) - np.diag(matrix)
    return int(np.argmax(sums))


def confirm_and_update(ref_path: ReferencePath, candidate: PrimitiveSequence,
                       alpha: float = 0.5,
                       between_count: int = BETWEEN_SAMPLE_COUNT) -> ReferencePath:
    """Fold an explicitly confirmed candidate into the reference path.

    The candidate joins the instance set, the medoid is re-selected, and the
    local threshold is refit from within-class scores (all instance pairs)
    against between-class scores from Markov-chain-generated paths; the
    generated paths prevent over-learning on the few real instances. The
    generation seed derives from the verifier id, so replaying the same
    confirmations reproduces the threshold state exactly.
    """
    cleaned = _prepare(candidate, ref_path.length_min)
    instances = ref_path.instances + [cleaned]
    matrix = pairwise_matrix(instances)
    medoid_index = select_medoid(instances, matrix)
    n = len(instances)
    iu = np.triu_indices(n, k=1)
    within = matrix[iu].tolist()
    chain = fit_markov(instances)
    medoid = instances[medoid_index]
    generated = sample_paths_matching(
        chain, len(medoid), between_count, seed=_verifier_seed(ref_path.verifier_id)
    )
    between = nw_score_many(generated, medoid).tolist()
    d_local = float(local_threshold(within, between, alpha))
    state = ThresholdState(
        d_initial=ref_path.threshold_state.d_initial, n=n, d_local=d_local
    )
    return ReferencePath(
        verifier_id=ref_path.verifier_id,
        length_min=ref_path.length_min,
        instances=instances,
        medoid_index=medoid_index,
        threshold_state=state,
    )


@dataclass
class Repository:
    paths: dict[str, list[ReferencePath]] = field(default_factory=dict)
    version: int = REPO_VERSION

    def reference_paths(self, verifier_id: str) -> list[ReferencePath]:
        if verifier_id not in self.paths or not self.paths[verifier_id]:
            raise NoReferencePath(f"no reference path enrolled for {verifier_id!r}")
        return self.paths[verifier_id]


def enroll(repo: Repository, verifier_id: str, sequence: PrimitiveSequence,
           length_min: float, alpha: float = 0.5, new_route: bool = False) -> Repository:
    """Add an authorized trajectory for a verifier.

    The first enrollment creates a fresh reference path (n=1, threshold =
    initial). Enrolling again for the same verifier confirms the sequence
    into the existing path unless `new_route` forces a separate one.
    """
    cleaned = _prepare(sequence, length_min)
    existing = repo.paths.get(verifier_id, [])
    if existing and not new_route:
        updated = confirm_and_update(existing[0], cleaned, alpha=alpha)
        repo.paths[verifier_id] = [updated] + existing[1:]
        return repo
    state = ThresholdState(d_initial=initial_threshold(length_min, alpha), n=1)
    path = ReferencePath(
        verifier_id=verifier_id,
        length_min=length_min,
        instances=[cleaned],
        medoid_index=0,
        threshold_state=state,
    )
    repo.paths.setdefault(verifier_id, []).append(path)
    return repo


def _seq_to_json(seq: PrimitiveSequence):
    return [[p.symbol, p.t_ns] for p in seq]


def _seq_from_json(items) -> PrimitiveSequence:
    return PrimitiveSequence.from_pairs(items)


def save(repo: Repository, path) -> None:
    obj = {
        "version": repo.version,
        "verifiers": {
            vid: [
                {
                    "length_min": rp.length_min,
                    "medoid_index": rp.medoid_index,
                    "threshold_state": rp.threshold_state.as_dict(),
                    "instances": [_seq_to_json(s) for s in rp.instances],
                }
                for rp in rps
            ]
            for vid, rps in repo.paths.items()
        },
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(obj, fh, indent=2)


def load(path) -> Repository:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            obj = json.load(fh)
    except (json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise CorruptFile(f"unreadable repository file: {exc}") from None
    if not isinstance(obj, dict) or "version" not in obj:
        raise CorruptFile("repository file missing version")
    if obj["version"] != REPO_VERSION:
        raise VersionMismatch(
            f"repository version {obj['version']} != supported {REPO_VERSION}"
        )
    try:
        repo = Repository()
        for vid, entries in obj["verifiers"].items():
            repo.paths[vid] = [
                ReferencePath(
                    verifier_id=vid,
                    length_min=e["length_min"],
                    instances=[_seq_from_json(s) for s in e["instances"]],
                    medoid_index=e["medoid_index"],
                    threshold_state=ThresholdState.from_dict(e["threshold_state"]),
                )
                for e in entries
            ]
        return repo
    except (KeyError, TypeError, ValueError, IndexError) as exc:
        raise CorruptFile(f"malformed repository contents: {exc}") from None
