"""Fixed-priority schedule simulation and busy-interval schedule reconnaissance."""

from .decompose import (
    CountCandidates,
    JobCountVector,
    ToleranceError,
    ambiguity_witness,
    enumerate_matches,
    job_count_candidates,
)
from .generator import (
    GenConfig,
    GenerationInfeasible,
    generate_taskset,
    harmonic_pair_count,
    rm_priorities,
    rta_schedulable,
    split_utilization,
)
from .harness import PipelineResult, SweepConfig, run_pipeline, run_sweep
from .metrics import PrecisionReport, TaskPrecision, naive_baseline, precision_ratio
from .model import (
    BusyInterval,
    ConfigurationError,
    ExecSlice,
    FormatError,
    Job,
    TaskSet,
    TaskSpec,
    Tick,
    Trace,
    hyper_period,
    read_taskset,
    write_taskset,
)
from .refine import InferenceState, build_state, project_window, refine_fixpoint
from .simulator import (
    NO_VARIATION,
    ObservationWindow,
    VariationModel,
    busy_intervals,
    clip_observation,
    sample_exec_time,
    simulate,
)
from .translate import (
    InferredJob,
    ReconstructedSchedule,
    arrivals_in_interval,
    commit_arrival,
    compact_translate,
    reconstruct,
)
from .windows import (
    ArrivalHistogram,
    ArrivalWindow,
    ClassifiedSegment,
    SegmentKind,
    accumulate_histogram,
    candidate_arrival_windows,
    classify_segments,
)

__version__ = "0.1.0"
