"""stash: trajectory-gated proximity verification at desk scale.

Raw inertial recordings become discrete trajectory primitives (M/S/L/R),
candidate approach paths are matched against enrolled reference paths with
Needleman-Wunsch alignment under adaptive decision thresholds, and a
simulated challenge-response protocol gates credential use on the result,
blocking message-relay attacks from a stationary prover.
"""

from .alignment import ScoringScheme, SimilarityScore, needleman_wunsch, nw_score, pairwise_matrix
from .config import Config
from .imu import ImuSample, SensorStream, estimate_gravity, linear_acceleration, load_recording, resample
from .movement import HmmParams, LogRegModel, aggregate_5s, train_logreg, viterbi_path, viterbi_smooth
from .pathmodel import MarkovChain, NoiseModel, fit_markov, sample_path, synthesize_corpus
from .protocol import Prover, RelayAdversary, SessionOutcome, SessionResult, Verifier, run_session, verify_proximity
from .repository import ReferencePath, Repository, confirm_and_update, enroll, select_medoid
from .thresholds import ThresholdState, confidence_factor, initial_threshold, local_threshold, mixed_threshold
from .trajectory import Primitive, PrimitiveSequence, merge_streams, strip_stationary, trim_to_duration
from .turns import TurnDetectorConfig, TurnEvent, detect_turns

__version__ = "0.1.0"
