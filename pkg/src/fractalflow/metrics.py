"""Endpoint and angular flow errors.

Standard deviations use the population convention (divide by N). Angular
errors are in degrees and use the unit-augmented vectors ``(u, v, 1)``,
which keeps zero flow well defined.
"""

from dataclasses import asdict, dataclass

import numpy as np

from .data.flo import known_mask
from .data.types import FlowField


@dataclass(frozen=True)
class MetricReport:
    aee: float
    sdee: float
    aae: float
    sdae: float
    pixel_count: int

    def as_dict(self):
        return asdict(self)


def _prepare(pred, gt, mask):
    if not isinstance(pred, FlowField):
        pred = FlowField.from_array(pred)
    if not isinstance(gt, FlowField):
        gt = FlowField.from_array(gt)
    if pred.shape != gt.shape:
        raise ValueError(f"prediction {pred.shape} and ground truth {gt.shape} differ in shape")
    valid = known_mask(gt) & known_mask(pred)
    if mask is not None:
        mask = np.asarray(mask, dtype=bool)
        if mask.shape != gt.shape:
            raise ValueError("mask shape does not match the flow fields")
        valid &= mask
    if not valid.any():
        raise ValueError("no pixels left to evaluate")
    return pred, gt, valid


def endpoint_errors(pred, gt):
    """Per-pixel Euclidean distance between the two flows."""
    return np.hypot(pred.u - gt.u, pred.v - gt.v)


def angular_errors(pred, gt):
    """Per-pixel angle (degrees) between (u_p, v_p, 1) and (u_g, v_g, 1)."""
    num = pred.u * gt.u + pred.v * gt.v + 1.0
    den = np.sqrt((pred.u**2 + pred.v**2 + 1.0) * (gt.u**2 + gt.v**2 + 1.0))
    return np.degrees(np.arccos(np.clip(num / den, -1.0, 1.0)))


def endpoint_error(pred, gt, mask=None):
    """(AEE, SDEE) over unmasked, known pixels."""
    pred, gt, valid = _prepare(pred, gt, mask)
    errors = endpoint_errors(pred, gt)[valid]
    return float(errors.mean()), float(errors.std())


def angular_error(pred, gt, mask=None):
    """(AAE, SDAE) in degrees over unmasked, known pixels."""
    pred, gt, valid = _prepare(pred, gt, mask)
    errors = angular_errors(pred, gt)[valid]
    return float(errors.mean()), float(errors.std())


def evaluate(pred, gt, mask=None):
    pred, gt, valid = _prepare(pred, gt, mask)
    ee = endpoint_errors(pred, gt)[valid]
    ae = angular_errors(pred, gt)[valid]
    return MetricReport(
        aee=float(ee.mean()),
        sdee=float(ee.std()),
        aae=float(ae.mean()),
        sdae=float(ae.std()),
        pixel_count=int(valid.sum()),
    )
