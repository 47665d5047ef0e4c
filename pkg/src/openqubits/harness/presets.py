"""Named parameter sets for the figure families, used as regression fixtures."""
from __future__ import annotations

from .config import ConfigError, SweepSpec, config_from_mapping

VARIANTS = {"rwa": "rwa-closed", "rwa-oracle": "rwa-oracle", "heom": "heom", "pseudomode": "pseudomode"}

_STRONG = {"bath.lambda": 0.1, "bath.omega0": 1.0, "time.t_final": 60.0, "time.samples": 601}
_ULTRA = {"bath.lambda": 0.01, "bath.gamma": 1e-4, "bath.omega0": 1.0,
          "time.t_final": 80.0, "time.samples": 401}
_GAMMAS = [0.0, 0.05, 0.1]          # 0, lambda/2, lambda at lambda = 0.1
_ALPHA3 = [0.0, 0.25, 0.5, 0.75, 1.0]
_BOTH = ("rwa-closed", "heom")

# name -> (base values, swept keys, solvers shown in the figure)
_PRESETS = {
    "fig1": ({**_STRONG, "bath.gamma": 0.0, "measures": ("pi_tangle", "svetlichny")},
             [("bath.gamma", _GAMMAS)], _BOTH),
    "fig1a": ({**_STRONG, "bath.gamma": 0.0, "measures": ("pi_tangle",)},
              [("bath.gamma", _GAMMAS)], ("rwa-closed",)),
    "fig1b": ({**_STRONG, "bath.gamma": 0.0, "measures": ("pi_tangle",)},
              [("bath.gamma", _GAMMAS)], ("heom",)),
    "fig1c": ({**_STRONG, "bath.gamma": 0.0, "measures": ("svetlichny",)},
              [("bath.gamma", _GAMMAS)], ("rwa-closed",)),
    "fig1d": ({**_STRONG, "bath.gamma": 0.0, "measures": ("svetlichny",)},
              [("bath.gamma", _GAMMAS)], ("heom",)),
    "fig2": ({**_STRONG, "bath.gamma": 0.01, "measures": ("chsh(ab)", "chsh(ac)")},
             [("bath.alpha3", _ALPHA3)], _BOTH),
    "fig3": ({**_STRONG, "bath.gamma": 0.01, "measures": ("pi_tangle", "concurrence(ab)", "concurrence(ac)")},
             [("bath.alpha3", _ALPHA3)], _BOTH),
    "fig4": ({**_ULTRA, "measures": ("pi_tangle", "svetlichny")}, [], _BOTH),
    "fig4a": ({**_ULTRA, "measures": ("pi_tangle",)}, [], _BOTH),
    "fig4b": ({**_ULTRA, "measures": ("svetlichny",)}, [], _BOTH),
    "fig5": ({**_ULTRA, "bath.alphas": (1.0, 1.0, 0.5), "measures": ("svetlichny", "chsh(ab)")}, [], _BOTH),
    "fig6": ({"bath.lambda": 0.1, "bath.gamma": 0.01, "bath.omega0": 1.0, "time.t_final": 60.0,
              "time.samples": 301, "initial": "ggg", "measures": ("pi_tangle", "concurrence(ab)")},
             [("bath.lambda", [0.1, 0.01])], ("heom",)),
}

PRESET_NAMES = tuple(_PRESETS)


class UnknownPresetError(ConfigError):
    pass


def figure_preset(name: str, variant: str | None = None) -> SweepSpec:
    """Sweep for one figure family.

    Parameters
    ----------
    name : str
        One of :data:`PRESET_NAMES`.
    variant : {"rwa", "rwa-oracle", "heom", "pseudomode"}, optional
        Run a single solver instead of the solvers of the figure.  When the
        figure shows both, the default sweeps ``solver`` over the RWA and
        HEOM solutions.
    """
    if name not in _PRESETS:
        raise UnknownPresetError(f"unknown preset {name!r}; available: {', '.join(PRESET_NAMES)}")
    values, sweeps, solvers = _PRESETS[name]
    if variant is not None:
        if variant not in VARIANTS:
            raise ConfigError(f"unknown variant {variant!r}; choose from {', '.join(VARIANTS)}")
        solvers = (VARIANTS[variant],)
    base = {"initial": "W", "bath.alphas": (1.0, 1.0, 1.0), "solver": solvers[0],
            "solver.L": 12, "name": name if variant is None else f"{name}-{variant}", **values}
    params = [(k, tuple(v)) for k, v in sweeps]
    if len(solvers) > 1:
        params.append(("solver", tuple(solvers)))
    return SweepSpec(config_from_mapping(base), tuple(params))
