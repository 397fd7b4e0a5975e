"""Core components for the SoftAbs HMC sampler."""
