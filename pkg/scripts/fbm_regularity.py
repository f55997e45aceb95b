"""Structure-function Hurst estimates and Hölder seminorm refinement for sampled paths."""
import numpy as np

from fbm_averaging import GridFunction, UniformGrid, holder_seminorm, sample_fbm_1d
from fbm_averaging.noise import estimate_holder_exponent

for H in (0.6, 0.75, 0.9):
    g = UniformGrid.span(0.0, 1.0, 1 / 8192)
    est = [estimate_holder_exponent(g.points, sample_fbm_1d(H, g, s)) for s in range(50)]
    w = sample_fbm_1d(H, g, 0)
    semi = [holder_seminorm(GridFunction(g.points[::k], w[::k]), H - 0.05) for k in (8, 4, 2)]
    print(f"H={H}: estimate {np.mean(est):.3f} +- {np.std(est):.3f};  seminorm(gamma=H-0.05) n=1024,2048,4096:",
          np.round(semi, 3))
