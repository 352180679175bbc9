"""Pathloss, Rayleigh fading, and interference-limited SIR evaluation.

The network is interference limited: thermal noise is pinned to zero and every
quality metric is a signal-to-interference ratio.  A link with no interferer
at all gets ``math.inf`` as a sentinel and is flagged by the caller.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import NumericalError, ParameterError
from .spatial import CellAssociation, D2DPairSet, pairwise_distance

ESTIMATION = "estimation"
DATA = "data"


def _kind_slices(ids) -> dict:
    """Slice per id kind; ids of one kind must be stored contiguously."""
    slices: dict = {}
    for pos, ident in enumerate(ids):
        kind = ident[0]
        if kind not in slices:
            slices[kind] = [pos, pos + 1]
        elif slices[kind][1] == pos:
            slices[kind][1] = pos + 1
        else:
            raise ParameterError(f"ids of kind {kind!r} are not contiguous")
    return {k: slice(a, b) for k, (a, b) in slices.items()}


@dataclass(frozen=True)
class RadioParams:
    """Transmit powers and the power-law pathloss exponent.

    ``noise_mw`` is reserved for future use and must stay 0: the model is
    interference limited by construction.
    """

    alpha: float
    p_c_mw: float
    p_d_mw: float
    noise_mw: float = 0.0

    def __post_init__(self):
        if not self.alpha > 2:
            raise ParameterError(f"pathloss exponent must exceed 2, got {self.alpha}")
        if not (self.p_c_mw > 0 and self.p_d_mw > 0):
            raise ParameterError("transmit powers must be positive")
        if self.noise_mw != 0.0:
            raise ParameterError("noise is out of scope; noise_mw must be 0")


def pathloss(distance, alpha: float):
    """Power-law attenuation ``distance ** -alpha``; singular at 0."""
    d = np.asarray(distance, dtype=float)
    if np.any(d <= 0):
        raise ParameterError("pathloss is singular at distance <= 0")
    out = d ** -alpha
    return float(out) if np.isscalar(distance) else out


@dataclass(frozen=True)
class FadingTable:
    """i.i.d. unit-mean exponential power gains for a (tx, rx) id grid.

    ``phase_tag`` records intent only (test-signal phase vs data phase);
    reusing one table across both phases models a coherence interval that
    spans the whole transmission.
    """

    gains: np.ndarray
    tx_ids: tuple
    rx_ids: tuple
    phase_tag: str = DATA

    def __post_init__(self):
        gains = np.asarray(self.gains, dtype=float)
        if gains.shape != (len(self.tx_ids), len(self.rx_ids)):
            raise ParameterError("gain matrix shape does not match the id lists")
        if gains.size and gains.min() < 0:
            raise ParameterError("fading gains must be nonnegative")
        gains = gains.copy()
        gains.flags.writeable = False
        object.__setattr__(self, "gains", gains)
        object.__setattr__(self, "_tx_index", {t: i for i, t in enumerate(self.tx_ids)})
        object.__setattr__(self, "_rx_index", {r: i for i, r in enumerate(self.rx_ids)})
        object.__setattr__(self, "_tx_slices", _kind_slices(self.tx_ids))
        object.__setattr__(self, "_rx_slices", _kind_slices(self.rx_ids))

    def gain(self, tx_id, rx_id) -> float:
        return float(self.gains[self._tx_index[tx_id], self._rx_index[rx_id]])

    def block(self, tx_kind: str, rx_kind: str) -> np.ndarray:
        """Zero-copy sub-matrix for ids of the form (kind, index)."""
        return self.gains[self._tx_slices.get(tx_kind, slice(0, 0)),
                          self._rx_slices.get(rx_kind, slice(0, 0))]


def draw_fading(tx_ids, rx_ids, rng: np.random.Generator, phase_tag: str = DATA) -> FadingTable:
    """Draw an i.i.d. Exp(1) gain for every (tx, rx) pair."""
    gains = rng.standard_exponential(size=(len(tx_ids), len(rx_ids)))
    return FadingTable(gains=gains, tx_ids=tuple(tx_ids), rx_ids=tuple(rx_ids), phase_tag=phase_tag)


@dataclass(frozen=True)
class SirSample:
    """SIR of one link, with the raw signal/interference powers in mW."""

    link_id: int
    sir: float
    signal_mw: float
    interference_mw: float

    @property
    def infinite(self) -> bool:
        return math.isinf(self.sir)


def _transmitting_ids(active) -> np.ndarray:
    """Accept an activation result (has .active_ids) or a plain id collection."""
    ids = getattr(active, "active_ids", active)
    return np.fromiter(sorted(ids), dtype=int, count=len(ids))


def _check_distances(dist: np.ndarray, what: str):
    if dist.size and dist.min() <= 0.0:
        raise NumericalError(f"zero {what} distance: transmitter sits on a receiver")


def d2d_power_matrix(tx_indices: np.ndarray, rx_indices: np.ndarray, pairs: D2DPairSet,
                     fading: FadingTable, params: RadioParams) -> np.ndarray:
    """Received power (mW) at each pair's receiver from each D2D transmitter.

    Row k is transmitter ``tx_indices[k]``; column m is the receiver of link
    ``rx_indices[m]``.  Entries where transmitter and receiver belong to the
    same link carry that link's own signal power.
    """
    dist = pairwise_distance(pairs.transmitters.xy[tx_indices], pairs.receivers.xy[rx_indices],
                             pairs.window)
    _check_distances(dist, "d2d")
    g = fading.block("d2d", "d2drx")[np.ix_(tx_indices, rx_indices)]
    return params.p_d_mw * g * dist ** -params.alpha


def cellular_to_d2d_power_matrix(rx_indices: np.ndarray, assoc: CellAssociation, pairs: D2DPairSet,
                                 fading: FadingTable, params: RadioParams) -> np.ndarray:
    """Received power (mW) at each pair's receiver from each uplink user."""
    dist = pairwise_distance(assoc.users.xy, pairs.receivers.xy[rx_indices], pairs.window)
    _check_distances(dist, "cellular-to-d2d")
    g = fading.block("cell", "d2drx")[:, rx_indices]
    return params.p_c_mw * g * dist ** -params.alpha


def d2d_sir_values(transmitting, measured, pairs: D2DPairSet, assoc: CellAssociation,
                   fading: FadingTable, params: RadioParams):
    """Signal and interference (mW) for the measured links.

    ``transmitting`` is the set of D2D links on air; ``measured`` the links
    whose receivers are being evaluated.  All uplink users always interfere.
    Returns aligned arrays (measured_ids, signal, interference).
    """
    tx = _transmitting_ids(transmitting)
    rx = _transmitting_ids(measured)
    own = d2d_power_matrix(rx, rx, pairs, fading, params).diagonal().copy()
    inter = np.zeros(len(rx))
    if len(tx):
        p = d2d_power_matrix(tx, rx, pairs, fading, params)
        inter += p.sum(axis=0)
        # a measured link that is itself transmitting must not self-interfere
        on_air = np.isin(rx, tx)
        inter[on_air] -= own[on_air]
    if len(assoc):
        inter += cellular_to_d2d_power_matrix(rx, assoc, pairs, fading, params).sum(axis=0)
    return rx, own, inter


def cellular_sir_values(active_d2d, assoc: CellAssociation, pairs: D2DPairSet,
                        fading: FadingTable, params: RadioParams):
    """Signal and interference (mW) at every base station.

    The BS's own user is the signal; all other uplink users and every active
    D2D transmitter interfere.
    """
    n = len(assoc)
    dist_cc = pairwise_distance(assoc.users.xy, assoc.bs.xy, assoc.bs.window)
    _check_distances(dist_cc, "cellular")
    p_cc = params.p_c_mw * fading.block("cell", "bs") * dist_cc ** -params.alpha
    signal = p_cc.diagonal().copy()
    inter = p_cc.sum(axis=0) - signal
    tx = _transmitting_ids(active_d2d)
    if len(tx):
        dist_dc = pairwise_distance(pairs.transmitters.xy[tx], assoc.bs.xy, assoc.bs.window)
        _check_distances(dist_dc, "d2d-to-bs")
        g = fading.block("d2d", "bs")[tx]
        inter += (params.p_d_mw * g * dist_dc ** -params.alpha).sum(axis=0)
    return np.arange(n), signal, inter


def _to_sample(link_id: int, signal: float, interference: float) -> SirSample:
    sir = signal / interference if interference > 0 else math.inf
    return SirSample(link_id=int(link_id), sir=float(sir), signal_mw=float(signal),
                     interference_mw=float(interference))


def sir_d2d(i: int, active, assoc: CellAssociation, pairs: D2DPairSet,
            fading: FadingTable, params: RadioParams) -> SirSample:
    """SIR at the receiver of D2D link ``i`` while ``active`` links transmit."""
    ids, signal, inter = d2d_sir_values(active, [i], pairs, assoc, fading, params)
    return _to_sample(ids[0], signal[0], inter[0])


def sir_cellular(i: int, active_d2d, assoc: CellAssociation, pairs: D2DPairSet,
                 fading: FadingTable, params: RadioParams) -> SirSample:
    """SIR at base station ``i`` with its own uplink user as the signal."""
    ids, signal, inter = cellular_sir_values(active_d2d, assoc, pairs, fading, params)
    return _to_sample(ids[i], signal[i], inter[i])
