"""Zeeman-broadened repumper line and power broadening of the A_y spectrum.

The six Zeeman components are summed into one profile, the drive is
calibrated to half saturation at the lowest power, and each spectrum is
fitted with a Gaussian as is common practice for such scans.

    python demos/line_profile.py
"""
import numpy as np

from catspec.fitting import WeightedSeries, fit_gaussian
from catspec.lineprofile import SpectralModel, power_series, profile_fwhm, spectrum_scan, zeeman_components
from catspec.signal import ProtocolParams

model = SpectralModel()
print("Zeeman components (MHz, weight):")
for shift, w in zeeman_components(model):
    print(f"  {shift / 1e6:+7.3f}  {w:.4f}")
print(f"composite FWHM {profile_fwhm(model) / 1e6:.2f} MHz, natural {model.natural_fwhm / 1e6:.1f} MHz")

grid = np.linspace(-60e6, 60e6, 41)
params = ProtocolParams()
for d in power_series(model, (1, 2, 4)):
    scan = spectrum_scan(model, d, params, grid)
    fit = fit_gaussian(WeightedSeries(grid, scan.a_y, 1e-3))
    print(f"power x{d.power:g}: peak scatter prob {scan.scatter_prob.max():.3f}, "
          f"Gaussian FWHM {fit.extras['fwhm'] / 1e6:.2f} MHz")
