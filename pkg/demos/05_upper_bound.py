"""Grid-search upper bound versus the gradient-based movable scheme.

The bound re-optimizes the beamformers for every candidate placement on a
coordinate-wise grid, with the proposed solution injected so the bound
provably covers it. The remaining gap is the price of gradient-local search
over an oscillatory placement landscape.
"""

import numpy as np

import mabeam as mb

params = mb.ScenarioParams(gain_convention="linear")
scenario = mb.sample_scenario(params, seed=11)
config = mb.SolverConfig(seed=4)

proposed = mb.solve(scenario, config)
print(f"proposed (gradient) : {proposed.final_sum_rate:.4f} bits/s/Hz "
      f"({proposed.iterations} iterations)")

bound = mb.upper_bound(
    scenario,
    mb.GridSpec(points_per_axis=5, mode="coordinate"),
    config,
    injected=[(proposed.centers, proposed.beamformer)],
)
print(f"grid bound          : {bound.final_sum_rate:.4f} bits/s/Hz "
      f"({bound.evaluations} placement evaluations)")
print(f"gap                 : {bound.final_sum_rate - proposed.final_sum_rate:.4f}")

lam = scenario.geometry.wavelength
print("\nbest placement vs proposed (wavelengths):")
print(np.round((bound.centers - proposed.centers) / lam, 3))
