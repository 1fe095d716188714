"""Latent neural-ODE surrogate solvers for parametric time-dependent PDEs.

A convolutional autoencoder compresses discretized solution fields to a low
dimensional latent space; a neural ODE advanced with explicit Runge-Kutta
schemes evolves the latent state; teacher-forcing / autoregressive /
time-generalization losses train the pair end to end on a small custom
reverse-mode autodiff engine.
"""

__version__ = "0.1.0"

from .autodiff import Tensor, no_grad

__all__ = ["Tensor", "no_grad", "__version__"]
