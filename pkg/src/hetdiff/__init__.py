"""Diffusion across a diffusivity jump: exact solutions, finite volumes and random walks."""
__version__ = "0.1.0"

from .model import (Diffusivity, Dirac, ModelParams, Sampled, Step, initial_pressure,  # noqa: E402
                    p_to_u, sigma_of, u_to_p, x_to_y, y_to_x)

__all__ = ["Diffusivity", "Dirac", "ModelParams", "Sampled", "Step", "initial_pressure",
           "p_to_u", "sigma_of", "u_to_p", "x_to_y", "y_to_x", "__version__"]
