"""Numerical laboratory for a hyperbolic-parabolic vasculogenesis model.

Modules
-------
model     pressure laws, equilibria, stability margin and effective diffusivity
spectral  per-mode linear theory: cubic spectrum, eigenprojections, propagators
lyapunov  certified per-mode energy functional and decay envelope
waves     heat kernel and first-order diffusion-wave asymptotic profiles
grid      periodic Fourier grids with 2/3-rule dealiasing
solver    pseudo-spectral nonlinear solver with exponential stiff integration
analysis  norms, whole-space radial decay curves, log-log rate fits
config    flat key=value run configuration and manifests
cli       command-line entry points (spectrum, linear-decay, lyapunov,
          simulate, verify)
"""

__version__ = "0.1.0"
