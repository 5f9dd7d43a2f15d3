"""
A full factorial experiment over the Brooks model
=================================================

Four staffing pulses crossed with two entropy factors gives eight trials.
Each trial is reduced to a few responses, and the whole run can be written
as a results CSV with one series file per trial.
"""

import tempfile
from pathlib import Path

from simse.experiment import (
    Factor, ResponseSpec, SdTarget, full_factorial, load_experiment_config, run_experiment, sensitivity_oat,
    write_results,
)
from simse.models import brooks_model, data_path

design = full_factorial([Factor("staffing_pulse", (0, 2, 4, 6)), Factor("entropy_factor", (0.03, 0.06))])
print(design.table())

target = SdTarget(brooks_model())
responses = [
    ResponseSpec("completed_work", "completed_work"),
    ResponseSpec("lowest_rate", "production_rate", "min_after", 50),
]
run = run_experiment(target, design, responses, parallel=True, max_workers=4)
print()
for r in run:
    a = r.assignment
    print(f"trial {r.trial_id}: pulse {a['staffing_pulse']:g}, entropy {a['entropy_factor']:<5}"
          f"  done {r.responses['completed_work']:8.2f}  lowest rate {r.responses['lowest_rate']:.4f}")

# The model is deterministic, so asking for replications just gives a note.
rep = run_experiment(target, design, responses[:1], replications=5)
print(rep.notes)

# One-at-a-time sensitivity of total output to the learning time.
for delta, value in sensitivity_oat(target, {"staffing_pulse": 4}, "individual_learning_time",
                                    (-0.5, -0.25, 0.25, 0.5), responses[0]):
    print(f"individual_learning_time {delta:+.0%}: completed_work {value:.2f}")

# The bundled configuration file describes the same experiment.
cfg = load_experiment_config(data_path("table1.exp"))
with tempfile.TemporaryDirectory() as tmp:
    out = Path(tmp) / "table1-results.csv"
    paths = write_results(run_experiment(cfg.target, cfg.design(), cfg.responses), cfg.design().factor_names,
                          cfg.responses, out)
    print(out.read_text().splitlines()[0])
    print(len(paths), "files written")
