"""Effective data-loss rate of delay-constrained multipath transmission
protected by block FEC: exact analysis, schedule construction, rate
optimization, Monte Carlo simulation and trace-driven evaluation."""

from . import _kernels
from .errors import (ConfigError, EnumerationLimitError,
                     InfeasibleScheduleError, MpfecError, TraceFormatError,
                     TraceResolutionError)
from .evenfast import (admissible, block_loss_prob, effective_loss_even,
                       effective_loss_even_nonsystematic, joint_data_loss,
                       path_loss_dist)
from .exact import effective_loss_exact
from .fec import FailureConfig, FecParams
from .gilbert import (BAD, GOOD, PathModel, derived_rates, sample_states,
                      transition_matrix, transition_prob)
from .optimize import (EvalReport, GammaResult, compositions, effective_loss,
                       gamma, minimize_tfec, optimize_immediate,
                       optimize_spread, search_unconstrained_schedule)
from .schedule import (FeasibilityReport, PathSet, Schedule, build_immediate,
                       build_spread, check_feasible, schedule_from_text,
                       schedule_to_text, t_fec)
from .sim import (Chunk, Trace, chunk_trace, filter_traces, generate_traces,
                  load_trace, mc_effective_loss, oracle_vs_prediction,
                  save_trace, trace_effective_loss)

__version__ = "0.1.0"

HAVE_COMPILED = _kernels.HAVE_COMPILED
