"""The full surrogate: encoder, latent dynamics, RK processor, decoder.

A trained model advances a PDE solution by encoding the initial field once,
stepping the latent vector through the Runge-Kutta processor for every
requested time interval, and decoding each latent state back to a field.

Checkpoints are single files: a JSON header holding the architecture and
any training state, followed by the raw parameter arrays. `load_checkpoint`
rebuilds the model from the header alone, so a checkpoint is self-describing.
"""

from __future__ import annotations

import numpy as np

from .. import nn
from .._binio import read_container, write_container
from ..autodiff.tensor import Tensor, no_grad
from .autoencoder import Decoder, DecoderConfig, Encoder, EncoderConfig
from .dynamics import DynamicsMLP, default_conditioning, rk_step, rollout
from .tableau import ButcherTableau, get_tableau

__all__ = ["SurrogateModel", "save_checkpoint", "load_checkpoint", "CHECKPOINT_MAGIC"]

CHECKPOINT_MAGIC = b"LNPDE1"


class SurrogateModel(nn.Module):
    """Encoder + latent ODE + decoder over a fixed grid layout."""

    def __init__(self, encoder: Encoder, decoder: Decoder, dynamics: DynamicsMLP,
                 tableau: ButcherTableau):
        super().__init__()
        ec, dc = encoder.config, decoder.config
        if ec.latent != dc.latent or ec.latent != dynamics.latent:
            raise ValueError("encoder, decoder and dynamics disagree on the latent size")
        if ec.extent != dc.extent or ec.channels != dc.channels:
            raise ValueError("encoder and decoder describe different fields")
        self.encoder = encoder
        self.decoder = decoder
        self.dynamics = dynamics
        self.tableau = tableau

    @classmethod
    def build(cls, *, channels, extent, latent, z, encoder_filters, encoder_kernels,
              decoder_filters, decoder_kernels, hidden, conditioning=None,
              stage=4, decoder_doublings=None, bias_free_encoder=False,
              encoder_final_gelu=False, decoder_first_gelu=False, seed=0,
              dtype=np.float64):
        """Construct a fresh model; `seed` fixes the weight initialization."""
        ec = EncoderConfig(
            channels=channels, extent=extent, filters=tuple(encoder_filters),
            kernels=tuple(encoder_kernels), latent=latent,
            bias_free=bias_free_encoder, final_gelu=encoder_final_gelu,
        )
        dc = DecoderConfig(
            channels=channels, extent=extent, filters=tuple(decoder_filters),
            kernels=tuple(decoder_kernels), latent=latent,
            doublings=decoder_doublings, first_gelu=decoder_first_gelu,
        )
        if ec.halvings != dc.doublings:
            raise ValueError(
                f"encoder halves {ec.halvings} times but decoder doubles "
                f"{dc.doublings} times"
            )
        if conditioning is None:
            conditioning = default_conditioning(z)
        dtype = np.dtype(dtype)
        rng = np.random.default_rng(seed)
        encoder = Encoder(ec, rng=rng, dtype=dtype)
        decoder = Decoder(dc, rng=rng, dtype=dtype)
        dynamics = DynamicsMLP(latent, z, hidden, conditioning=conditioning,
                               rng=rng, dtype=dtype)
        tableau = get_tableau(stage) if isinstance(stage, int) else stage
        return cls(encoder, decoder, dynamics, tableau)

    @property
    def dtype(self) -> np.dtype:
        return next(iter(self.parameters())).dtype

    # -- config round trip ------------------------------------------------

    def config_meta(self) -> dict:
        return {
            "dtype": self.dtype.name,
            "encoder": self.encoder.config.to_meta(),
            "decoder": self.decoder.config.to_meta(),
            "dynamics": {
                "latent": self.dynamics.latent,
                "z": self.dynamics.z,
                "hidden": list(self.dynamics.hidden),
                "conditioning": self.dynamics.conditioning,
            },
            "tableau": self.tableau.to_meta(),
        }

    @classmethod
    def from_config_meta(cls, meta: dict) -> "SurrogateModel":
        dtype = np.dtype(meta.get("dtype", "float64"))
        ec = EncoderConfig.from_meta(meta["encoder"])
        dc = DecoderConfig.from_meta(meta["decoder"])
        dyn = meta["dynamics"]
        encoder = Encoder(ec, dtype=dtype)
        decoder = Decoder(dc, dtype=dtype)
        dynamics = DynamicsMLP(dyn["latent"], dyn["z"], dyn["hidden"],
                               conditioning=dyn["conditioning"], dtype=dtype)
        return cls(encoder, decoder, dynamics, ButcherTableau.from_meta(meta["tableau"]))

    # -- forward paths -----------------------------------------------------

    def encode(self, fields: Tensor) -> Tensor:
        return self.encoder(fields)

    def decode(self, eps: Tensor) -> Tensor:
        return self.decoder(eps)

    def step(self, eps: Tensor, mu: Tensor, dt) -> Tensor:
        """One processor application over the interval dt."""
        return rk_step(self.dynamics, eps, mu, dt, self.tableau)

    def rollout(self, eps0: Tensor, mu: Tensor, dts, guard: float = 1e6):
        """Latent trajectory [eps0, ..., epsF], one rk step per interval."""
        return rollout(self.dynamics, eps0, mu, dts, self.tableau, guard=guard)

    def predict_fields(self, s0, mu, dts, guard: float = 1e6) -> np.ndarray:
        """Inference: encode s0 once, advance, decode every state.

        s0: [B, m, *extent] array (or Tensor), mu: [B, z], dts: sequence of
        time intervals. Returns [B, F+1, m, *extent] as a plain array.
        """
        dt = self.dtype
        with no_grad():
            s0 = s0 if isinstance(s0, Tensor) else Tensor(np.asarray(s0, dtype=dt))
            mu = mu if isinstance(mu, Tensor) else Tensor(np.asarray(mu, dtype=dt))
            states = self.rollout(self.encode(s0), mu, dts, guard=guard)
            flat = Tensor(np.concatenate([s.data for s in states], axis=0))
            fields = self.decode(flat).data
        # decode ran frame-major; reorder to [B, F+1, m, *extent]
        out = fields.reshape((len(states), s0.shape[0]) + fields.shape[1:])
        return np.ascontiguousarray(np.swapaxes(out, 0, 1))


def save_checkpoint(path, model: SurrogateModel, *, train_meta: dict | None = None,
                    extra_arrays: dict | None = None) -> None:
    """Write a self-describing checkpoint.

    train_meta: JSON-safe training state (epoch, best loss, schedule...).
    extra_arrays: additional arrays, e.g. optimizer moments; stored under
    an `extra/` prefix so they never collide with model parameters.
    """
    meta = {
        "kind": "surrogate-checkpoint",
        "model": model.config_meta(),
        "train": train_meta or {},
    }
    arrays = {"param/" + k: v for k, v in model.state_arrays().items()}
    for k, v in (extra_arrays or {}).items():
        arrays["extra/" + k] = np.asarray(v)
    write_container(path, CHECKPOINT_MAGIC, meta, arrays)


def load_checkpoint(path):
    """Rebuild (model, train_meta, extra_arrays) from a checkpoint file."""
    meta, arrays = read_container(path, CHECKPOINT_MAGIC)
    model = SurrogateModel.from_config_meta(meta["model"])
    params = {k[len("param/"):]: v for k, v in arrays.items() if k.startswith("param/")}
    extra = {k[len("extra/"):]: v for k, v in arrays.items() if k.startswith("extra/")}
    model.load_state_arrays(params)
    return model, meta.get("train", {}), extra
