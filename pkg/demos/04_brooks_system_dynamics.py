"""
System dynamics: Brooks' Law
============================

Ten veterans work on a project; when perceived schedule slip crosses a
threshold a pulse of rookies joins.  Rookies need mentoring and add
communication overhead, so production dips before it recovers.
"""

import numpy as np

from simse.models import BrooksParams, brooks_model, trigger_time
from simse.sd import check_model, dumps, simulate

model = brooks_model(BrooksParams(staffing_pulse=4, entropy_factor=0.03))
print("stocks:", [s.name for s in model.stocks])
print("warnings:", check_model(model) or "none")

traj = simulate(model)
t0 = trigger_time(traj)
pr = traj["production_rate"]
print(f"staffing pulse triggered at t={t0:g}")

pre = pr[traj.index_of(t0) - 1]
i_min = int(np.argmin(pr[traj.times > t0])) + traj.index_of(t0) + 1
print(f"production before {pre:.4f}, lowest {pr[i_min]:.4f} at t={traj.times[i_min]:g}, final {pr[-1]:.4f}")

# Rookies and veterans together always equal the initial team plus what was delivered.
team = traj["rookies"] + traj["veterans"]
print("team size at start / end:", team[0], round(team[-1], 9))

# A small table of the run, every 25 time units.
for t in range(0, 201, 25):
    i = traj.index_of(t)
    print(f"t={t:>3}  rookies {traj['rookies'][i]:6.3f}  veterans {traj['veterans'][i]:7.3f}  "
          f"production {pr[i]:.4f}")

# Integration method and step can be swapped without touching the model.
fine = simulate(model, dt=0.125, method="rk4")
print(f"final completed work: euler dt=0.25 {traj['completed_work'][-1]:.3f}, "
      f"rk4 dt=0.125 {fine['completed_work'][-1]:.3f}")

# Models serialise to a plain text format that the command line reads.
print("\n".join(dumps(model).splitlines()[:6]))
