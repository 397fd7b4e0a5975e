"""SoftAbs HMC - Riemannian Manifold Hamiltonian Monte Carlo with the SoftAbs metric."""

__version__ = "0.1.0"
__description__ = "Riemannian Manifold Hamiltonian Monte Carlo with the SoftAbs metric"
