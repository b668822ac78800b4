"""Desk-scale version of the sum-rate-versus-power study.

Paired trials: at each power point both schemes see identical channel draws,
so the movable-vs-fixed gap is read directly off the means. Increase
``trials`` toward 100 for publication-quality error bars.
"""

from mabeam import ExperimentConfig
from mabeam.experiments import run_experiment, rows_to_csv

config = ExperimentConfig(
    gain_convention="linear",
    schemes=("ma-sub", "fpa-sub"),
    sweep_axis="power_dbm",
    sweep_values=(0.0, 5.0, 10.0, 15.0),
    trials=10,
    restarts=1,
    master_seed=1,
    workers=2,
)

rows, records = run_experiment(config)
print(rows_to_csv(rows))

print("power  ma-sub    fpa-sub   gap")
by_key = {(r.scheme, r.sweep_value): r for r in rows}
for p in config.sweep_values:
    ma = by_key[("ma-sub", p)].mean_rate_bps_hz
    fpa = by_key[("fpa-sub", p)].mean_rate_bps_hz
    print(f"{p:5.0f}  {ma:8.3f}  {fpa:8.3f}  {ma-fpa:+.3f}")
