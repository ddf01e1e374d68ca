"""Checkpoint files: a zip of ``.npy`` arrays plus a JSON header.

Entries carry a fixed timestamp so identical state gives identical bytes.
Files are written to a temporary name and renamed into place.
"""

import io
import json
import os
import zipfile
from dataclasses import dataclass, field

import numpy as np

from .engine import AdamState
from .errors import FormatError

CHECKPOINT_VERSION = 1
_EPOCH = (1980, 1, 1, 0, 0, 0)


@dataclass
class Checkpoint:
    config: dict
    params: dict
    norms: dict  # name -> (running_mean, running_var)
    adam: AdamState
    best_loss: float
    best_epoch: int
    epoch: int  # optimizer steps taken before this state
    bn_mode: str = "train"
    extra: dict = field(default_factory=dict)


def _write_array(zf, name, array):
    buf = io.BytesIO()
    np.lib.format.write_array(buf, np.ascontiguousarray(array), allow_pickle=False)
    info = zipfile.ZipInfo(name, date_time=_EPOCH)
    info.compress_type = zipfile.ZIP_DEFLATED
    info.external_attr = 0o644 << 16
    zf.writestr(info, buf.getvalue())


def save_checkpoint(path, ckpt):
    names = list(ckpt.params)
    header = {
        "version": CHECKPOINT_VERSION,
        "config": ckpt.config,
        "param_names": names,
        "param_shapes": [list(ckpt.params[n].shape) for n in names],
        "norm_names": list(ckpt.norms),
        "adam": {
            "step_count": ckpt.adam.step_count,
            "beta1": ckpt.adam.beta1,
            "beta2": ckpt.adam.beta2,
            "epsilon": ckpt.adam.epsilon,
        },
        "best_loss": ckpt.best_loss,
        "best_epoch": ckpt.best_epoch,
        "epoch": ckpt.epoch,
        "bn_mode": ckpt.bn_mode,
        "extra": ckpt.extra,
    }
    tmp = f"{path}.tmp"
    with zipfile.ZipFile(tmp, "w") as zf:
        info = zipfile.ZipInfo("header.json", date_time=_EPOCH)
        info.external_attr = 0o644 << 16
        zf.writestr(info, json.dumps(header, indent=1))
        for i, name in enumerate(names):
            _write_array(zf, f"param/{i:04d}.npy", ckpt.params[name])
        for i, name in enumerate(ckpt.norms):
            mean, var = ckpt.norms[name]
            _write_array(zf, f"norm/{i:04d}_mean.npy", mean)
            _write_array(zf, f"norm/{i:04d}_var.npy", var)
        for i, (m, v) in enumerate(zip(ckpt.adam.first_moment, ckpt.adam.second_moment)):
            _write_array(zf, f"adam/{i:04d}_m.npy", m)
            _write_array(zf, f"adam/{i:04d}_v.npy", v)
    os.replace(tmp, path)


def _read_array(zf, name):
    with zf.open(name) as fh:
        return np.lib.format.read_array(io.BytesIO(fh.read()), allow_pickle=False)


def load_checkpoint(path, expected_shapes=None):
    """Read a checkpoint; any damage or mismatch raises :class:`FormatError`.

    ``expected_shapes`` (name -> shape) is checked against the stored
    parameters when given.
    """
    try:
        with zipfile.ZipFile(path) as zf:
            header = json.loads(zf.read("header.json"))
            if header.get("version") != CHECKPOINT_VERSION:
                raise FormatError(f"{path}: unsupported checkpoint version {header.get('version')!r}")
            names = header["param_names"]
            params = {}
            for i, (name, shape) in enumerate(zip(names, header["param_shapes"])):
                array = _read_array(zf, f"param/{i:04d}.npy")
                if list(array.shape) != shape:
                    raise FormatError(f"{path}: parameter {name} has shape {array.shape}, header says {shape}")
                params[name] = array
            norms = {}
            for i, name in enumerate(header["norm_names"]):
                norms[name] = (
                    _read_array(zf, f"norm/{i:04d}_mean.npy"),
                    _read_array(zf, f"norm/{i:04d}_var.npy"),
                )
            adam_meta = header["adam"]
            first, second = [], []
            for i, name in enumerate(names):
                m = _read_array(zf, f"adam/{i:04d}_m.npy")
                v = _read_array(zf, f"adam/{i:04d}_v.npy")
                if m.shape != params[name].shape or v.shape != params[name].shape:
                    raise FormatError(f"{path}: optimizer state for {name} has the wrong shape")
                first.append(m)
                second.append(v)
    except FormatError:
        raise
    except (zipfile.BadZipFile, KeyError, ValueError, OSError, EOFError) as exc:
        raise FormatError(f"{path}: unreadable checkpoint ({exc})") from exc

    if expected_shapes is not None:
        if list(expected_shapes) != names:
            raise FormatError(f"{path}: parameter names do not match the model")
        for name, shape in expected_shapes.items():
            if tuple(params[name].shape) != tuple(shape):
                raise FormatError(f"{path}: {name} has shape {params[name].shape}, model expects {tuple(shape)}")

    adam = AdamState(
        step_count=adam_meta["step_count"],
        first_moment=first,
        second_moment=second,
        beta1=adam_meta["beta1"],
        beta2=adam_meta["beta2"],
        epsilon=adam_meta["epsilon"],
    )
    return Checkpoint(
        config=header["config"],
        params=params,
        norms=norms,
        adam=adam,
        best_loss=header["best_loss"],
        best_epoch=header["best_epoch"],
        epoch=header["epoch"],
        bn_mode=header.get("bn_mode", "train"),
        extra=header.get("extra", {}),
    )
