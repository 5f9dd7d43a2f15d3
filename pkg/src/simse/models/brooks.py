"""Brooks' Law staffing model.

A late project adds ``staffing_pulse`` rookies once, when the perceived
schedule slip first reaches ``scheduled_threshold``.  Rookies produce less,
drain veteran time through mentoring and enlarge the communication overhead,
so production drops at first and later overtakes its old level once the
rookies have been assimilated.

The equations are a decided reconstruction (only the variable names of the
original diagram are known)::

    team_size              = rookies + veterans
    communication_overhead = MIN(1, MAX(0, entropy_factor * (team_size - 1) / 2))
    mentoring_load         = investment_in_mentoring * rookies
    effective_veterans     = MAX(0, veterans - mentoring_load)
    production_rate        = nominal_productivity * (effective_veterans + rookie_fraction * rookies)
                             * (1 - communication_overhead)
    scheduled_completion   = initial_veterans * nominal_productivity * TIME
    perceived_slip         = MAX(0, (scheduled_completion - completed_work) / project_size)
    trigger_time           = LATCH_TIME(perceived_slip >= scheduled_threshold, -1)

The overhead grows linearly with the number of colleagues each member has to
talk to.  The pairwise count ``n (n - 1) / 2`` saturates the cap for any
realistic entropy factor and a ten-person team, which would pin production
at zero.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass

from ..sd import BOUNDARY, SDModel, TimeSpec


@dataclass(frozen=True)
class BrooksParams:
    staffing_pulse: float = 0.0
    entropy_factor: float = 0.03
    # first grid time with slip >= threshold is t=100 at entropy 0.03
    scheduled_threshold: float = 0.0337
    individual_learning_time: float = 20.0
    investment_in_mentoring: float = 0.25
    initial_veterans: float = 10.0
    nominal_productivity: float = 1.0
    project_size: float = 4000.0
    horizon: float = 300.0
    dt: float = 0.25
    rookie_fraction: float = 0.4

    def __post_init__(self):
        for name, value in asdict(self).items():
            if value < 0:
                raise ValueError(f"{name} must be nonnegative, got {value}")
        if self.investment_in_mentoring > 1 or self.entropy_factor > 1:
            raise ValueError("investment_in_mentoring and entropy_factor must lie in [0, 1]")
        if self.individual_learning_time <= 0 or self.project_size <= 0 or self.dt <= 0:
            raise ValueError("individual_learning_time, project_size and dt must be positive")


# model constants; horizon and dt go into the time specification instead
CONSTANTS = ("staffing_pulse", "entropy_factor", "scheduled_threshold", "individual_learning_time",
             "investment_in_mentoring", "initial_veterans", "nominal_productivity", "project_size",
             "rookie_fraction")


def brooks_model(params: BrooksParams = BrooksParams()) -> SDModel:
    m = SDModel("brooks", time=TimeSpec(0.0, params.horizon, params.dt, "euler"))
    for name in CONSTANTS:
        m.const(name, getattr(params, name))
    m.stock("rookies", 0, nonnegative=True)
    m.stock("veterans", "initial_veterans", nonnegative=True)
    m.stock("completed_work", 0, nonnegative=True)
    m.flow("personnel_allocation", BOUNDARY, "rookies",
           "IF(trigger_time >= 0, PULSE(trigger_time, staffing_pulse / DT, DT), 0)")
    m.flow("assimilation_rate", "rookies", "veterans", "rookies / individual_learning_time")
    m.flow("production", BOUNDARY, "completed_work", "production_rate")
    m.aux("team_size", "rookies + veterans")
    m.aux("communication_overhead", "MIN(1, MAX(0, entropy_factor * (team_size - 1) / 2))")
    m.aux("mentoring_load", "investment_in_mentoring * rookies")
    m.aux("effective_veterans", "MAX(0, veterans - mentoring_load)")
    m.aux("production_rate", "nominal_productivity * (effective_veterans + rookie_fraction * rookies)"
                             " * (1 - communication_overhead)")
    m.aux("scheduled_completion", "initial_veterans * nominal_productivity * TIME")
    m.aux("perceived_slip", "MAX(0, (scheduled_completion - completed_work) / project_size)")
    m.aux("trigger_time", "LATCH_TIME(perceived_slip >= scheduled_threshold, -1)")
    m.aux("allocation_trigger", "IF(trigger_time >= 0, 1, 0)")
    return m


def trigger_time(trajectory) -> float | None:
    """Grid time at which the allocation fired, or None."""
    t = trajectory["trigger_time"][-1]
    return None if t < 0 else float(t)
