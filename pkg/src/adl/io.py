"""ADLM matrix files, CSV import, and model/dataset bundles.

ADLM layout (all little-endian)::

    magic   4 bytes  b"ADLM"
    version u16      1
    rows    u64
    cols    u64
    dtype   u8       0 = float32, 1 = float64
    payload rows*cols values, row-major

Readers reject truncated payloads and trailing bytes.
"""

import hashlib
import json
import struct
from pathlib import Path

import numpy as np

from .dictionaries import ArchetypalDictionary, FreeDictionary
from .encoders import EncoderParams
from .errors import InvalidInputError
from .training import SaeModel, Standardizer

MAGIC = b"ADLM"
VERSION = 1
_HEADER = struct.Struct("<4sHQQB")
_DTYPES = {0: np.dtype("<f4"), 1: np.dtype("<f8")}
_CODES = {np.dtype("<f4"): 0, np.dtype("<f8"): 1}


def encode_adlm(M, dtype=np.float64):
    M = np.asarray(M)
    if M.ndim == 1:
        M = M[None, :]
    if M.ndim != 2:
        raise InvalidInputError(f"ADLM stores 2-D matrices, got shape {M.shape}")
    dt = np.dtype(dtype).newbyteorder("<")
    if dt not in _CODES:
        raise InvalidInputError(f"unsupported dtype {dtype}")
    payload = np.ascontiguousarray(M, dtype=dt).tobytes(order="C")
    return _HEADER.pack(MAGIC, VERSION, M.shape[0], M.shape[1], _CODES[dt]) + payload


def decode_adlm(buf, as_float64=True):
    if len(buf) < _HEADER.size:
        raise InvalidInputError("ADLM buffer shorter than header")
    magic, version, rows, cols, code = _HEADER.unpack_from(buf)
    if magic != MAGIC:
        raise InvalidInputError(f"bad magic {magic!r}")
    if version != VERSION:
        raise InvalidInputError(f"unsupported ADLM version {version}")
    if code not in _DTYPES:
        raise InvalidInputError(f"unknown dtype code {code}")
    dt = _DTYPES[code]
    expected = _HEADER.size + rows * cols * dt.itemsize
    if len(buf) != expected:
        raise InvalidInputError(
            f"payload size mismatch: expected {expected} bytes, got {len(buf)}"
        )
    M = np.frombuffer(buf, dtype=dt, offset=_HEADER.size).reshape(rows, cols)
    return M.astype(np.float64) if as_float64 else M.copy()


def write_adlm(path, M, dtype=np.float64):
    Path(path).write_bytes(encode_adlm(M, dtype))


def read_adlm(path, as_float64=True):
    return decode_adlm(Path(path).read_bytes(), as_float64=as_float64)


def read_matrix(path):
    """ADLM or CSV (comma-separated, optional non-numeric header row)."""
    path = Path(path)
    if path.suffix.lower() == ".csv":
        return read_csv_matrix(path)
    return read_adlm(path)


def read_csv_matrix(path):
    with open(path) as fh:
        first = fh.readline()
    try:
        [float(x) for x in first.strip().split(",")]
        skip = 0
    except ValueError:
        skip = 1
    M = np.loadtxt(path, delimiter=",", skiprows=skip, ndmin=2, dtype=np.float64)
    if not np.all(np.isfinite(M)):
        raise InvalidInputError(f"{path} contains non-finite values")
    return M


def digest(M):
    """SHA-256 of the float64 ADLM encoding of ``M``."""
    return hashlib.sha256(encode_adlm(M)).hexdigest()


def dump_json(path, obj):
    Path(path).write_text(json.dumps(obj, indent=2, sort_keys=True, allow_nan=False) + "\n")


# ------------------------------------------------------------------ models

def save_model(model, directory):
    """Write a model as ADLM matrices plus ``model.json``."""
    out = Path(directory)
    out.mkdir(parents=True, exist_ok=True)
    enc = model.encoder
    files = {"W_enc": enc.W_enc, "b": enc.b[None, :],
             "std_mean": model.standardizer.mean[None, :],
             "std_scale": model.standardizer.std[None, :]}
    if enc.log_theta is not None:
        files["log_theta"] = enc.log_theta[None, :]
    dic = model.dictionary
    if isinstance(dic, ArchetypalDictionary):
        files.update(W=dic.W, C=dic.C, Lambda=dic.Lambda)
        meta = {"parameterization": "archetypal", "delta": dic.delta,
                "n_prime": int(dic.C.shape[0])}
    else:
        files["D"] = dic.D
        meta = {"parameterization": "free"}
    for name, arr in files.items():
        write_adlm(out / f"{name}.adlm", arr)
    meta.update(
        variant=model.variant,
        nonlinearity=enc.nonlinearity,
        k_active=enc.k_active,
        bandwidth=enc.bandwidth,
        n_atoms=int(enc.n_atoms),
        n_features=int(enc.W_enc.shape[0]),
        files=sorted(f"{name}.adlm" for name in files),
        shapes={name: list(np.atleast_2d(arr).shape) for name, arr in sorted(files.items())},
    )
    dump_json(out / "model.json", meta)
    return out


def load_model(directory):
    src = Path(directory)
    meta = json.loads((src / "model.json").read_text())

    def rd(name):
        return read_adlm(src / f"{name}.adlm")

    log_theta = rd("log_theta")[0] if (src / "log_theta.adlm").exists() else None
    enc = EncoderParams(W_enc=rd("W_enc"), b=rd("b")[0], nonlinearity=meta["nonlinearity"],
                        k_active=meta["k_active"], log_theta=log_theta,
                        bandwidth=meta["bandwidth"])
    if meta["parameterization"] == "archetypal":
        dic = ArchetypalDictionary(W=rd("W"), C=rd("C"), Lambda=rd("Lambda"),
                                   delta=meta["delta"])
    else:
        dic = FreeDictionary(rd("D"))
    st = Standardizer(mean=rd("std_mean")[0], std=rd("std_scale")[0])
    return SaeModel(encoder=enc, dictionary=dic, standardizer=st, variant=meta["variant"])


def write_history_csv(path, history):
    lines = ["step,loss,r2_batch,l0_mean"]
    lines += [f"{s},{loss!r},{r2b!r},{l0!r}" for s, loss, r2b, l0 in history]
    Path(path).write_text("\n".join(lines) + "\n")


# ---------------------------------------------------------------- datasets

def save_dataset(directory, manifest, **matrices):
    """Paired ADLM matrices plus ``manifest.json`` listing them."""
    out = Path(directory)
    out.mkdir(parents=True, exist_ok=True)
    for name, M in matrices.items():
        write_adlm(out / f"{name}.adlm", M)
    manifest = dict(manifest)
    manifest["matrices"] = {name: {"file": f"{name}.adlm", "shape": list(np.shape(M)),
                                   "sha256": digest(M)}
                            for name, M in sorted(matrices.items())}
    dump_json(out / "manifest.json", manifest)
    return out


def load_dataset(directory):
    src = Path(directory)
    manifest = json.loads((src / "manifest.json").read_text())
    mats = {name: read_adlm(src / info["file"]) for name, info in manifest["matrices"].items()}
    return manifest, mats
