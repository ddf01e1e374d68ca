"""End-to-end acceptance checks, one test per criterion.

Each test records a single ``PASS``/``FAIL`` line; ``conftest.py`` prints them
at the end of the pytest run. Running this file directly prints the same
lines without pytest.

Criteria 5 and 6 train the full-width network and take several minutes.
"""

import contextlib
import filecmp
import math
import os
import sys
import tempfile
from pathlib import Path

import numpy as np

sys.path.insert(0, str(Path(__file__).parent))

from _gradcheck import numeric_grad, rel_error  # noqa: E402
from oracles import energy_loop, metrics_loop  # noqa: E402

from fractalflow import cli, model as model_module  # noqa: E402
from fractalflow.data import (  # noqa: E402
    FlowField,
    default_circles,
    make_phantom_pair,
    read_flo,
    save_grayscale,
    warp_image,
    write_flo,
)
from fractalflow.energy import EnergyWeights, anisotropic_tv, data_residual, total_energy  # noqa: E402
from fractalflow.engine import (  # noqa: E402
    BatchNormState,
    Tensor,
    batchnorm2d,
    bilinear_resize,
    conv2d,
    conv_transpose2d,
    maxpool2d,
    pad2d,
    relu,
)
from fractalflow.metrics import evaluate  # noqa: E402
from fractalflow.model import FdnConfig, init_model, predict_flow  # noqa: E402
from fractalflow.runner import TABLE_COLUMNS, ExperimentConfig, run_experiment  # noqa: E402

RESULTS = []

INSTANCES = 100
KINK = 1e-3
GRAD_TOL = 1e-4


def report(number, ok, detail):
    line = f"criterion {number}: {'PASS' if ok else 'FAIL'}  {detail}"
    RESULTS.append(line)
    print(line)
    return ok


# -- criterion 1: gradients ---------------------------------------------------

def _probe_check(fn, arrays, rng, max_coords=24):
    """Worst relative error of d<fn(arrays), probe>/d(array) over every input."""
    tensors = [Tensor(a.copy(), requires_grad=True) for a in arrays]
    out = fn(tensors)
    probe = rng.normal(size=out.shape) if out.shape else np.array(1.0)
    (out * Tensor(probe)).sum().backward() if out.shape else out.backward()

    def scalar(arrs):
        res = fn([Tensor(a) for a in arrs]).data
        return float((res * probe).sum())

    worst = 0.0
    for i, t in enumerate(tensors):
        n = arrays[i].size
        coords = sorted(rng.choice(n, size=min(n, max_coords), replace=False).tolist())
        numeric = numeric_grad(scalar, arrays, i, coords=coords)
        worst = max(worst, rel_error(t.grad.reshape(-1)[coords], numeric))
    return worst


def _shape(rng, max_c=4, min_hw=1, even=False):
    b = int(rng.integers(1, 3))
    c = int(rng.integers(1, max_c + 1))
    if even:
        h, w = 2 * rng.integers(1, 5, size=2)
    else:
        h, w = rng.integers(min_hw, 9, size=2)
    return b, c, int(h), int(w)


def _away_from_zero(values, margin=KINK):
    """Push entries out of (-margin, margin) so no kink lies within ``margin``."""
    values = values.copy()
    near = np.abs(values) < 2 * margin
    values[near] += np.where(values[near] >= 0, 4 * margin, -4 * margin)
    return values


def _pool_input(rng, shape):
    """Values whose 2x2 windows have a unique max with a gap above KINK."""
    b, c, h, w = shape
    ranks = rng.permutation(b * c * h * w).reshape(shape).astype(float)
    return ranks * 10 * KINK + rng.uniform(0, KINK, size=shape)


def _op_cases():
    def conv(rng):
        b, c, h, w = _shape(rng, min_hw=3)
        k = int(rng.choice([1, 3]))
        cout = int(rng.integers(1, 5))
        stride = int(rng.choice([1, 2]))
        pad = int(rng.integers(0, 2)) if k == 3 else 0
        arrays = [rng.normal(size=(b, c, h, w)), rng.normal(size=(cout, c, k, k)), rng.normal(size=cout)]
        return (lambda t: conv2d(t[0], t[1], t[2], stride=stride, padding=pad)), arrays

    def convt(rng):
        b, _, h, w = _shape(rng, min_hw=1)
        c = int(rng.choice([2, 4]))
        h, w = min(h, 4), min(w, 4)
        cout = int(rng.integers(1, 5))
        arrays = [rng.normal(size=(b, c, h, w)), rng.normal(size=(c, cout, 2, 2)), rng.normal(size=cout)]
        return (lambda t: conv_transpose2d(t[0], t[1], t[2])), arrays

    def pool(rng):
        return (lambda t: maxpool2d(t[0])), [_pool_input(rng, _shape(rng, even=True))]

    def bn(rng):
        b, c, h, w = _shape(rng, min_hw=2)
        arrays = [rng.normal(size=(b, c, h, w)), rng.uniform(0.5, 2, size=c), rng.normal(size=c)]
        return (lambda t: batchnorm2d(t[0], t[1], t[2], state=BatchNormState.fresh(c))), arrays

    def resize(rng):
        shape = _shape(rng, min_hw=1)
        oh, ow = (int(v) for v in rng.integers(1, 9, size=2))
        return (lambda t: bilinear_resize(t[0], oh, ow)), [rng.normal(size=shape)]

    def relu_case(rng):
        return (lambda t: relu(t[0])), [_away_from_zero(rng.normal(size=_shape(rng)))]

    def arithmetic(rng):
        shape = _shape(rng)
        a, b = rng.normal(size=shape), rng.normal(size=shape)
        b = _away_from_zero(b)
        kind = int(rng.integers(0, 5))
        if kind == 0:
            fn = lambda t: ((t[0] + t[1]) * t[0] - t[1] * 0.5).sum()  # noqa: E731
        elif kind == 1:
            fn = lambda t: (t[0] * t[1]).square().mean()  # noqa: E731
        elif kind == 2:
            fn = lambda t: (t[1].abs() * 3.0 - t[0]).mean()  # noqa: E731
        elif kind == 3:
            fn = lambda t: pad2d(t[0] * t[1], 1, 2)[:, :, 1:, :].sum()  # noqa: E731
        else:
            fn = lambda t: (-(t[0] - t[1]) * (t[0] + 2.0)).square().sum()  # noqa: E731
        return fn, [a, b]

    return {
        "conv2d": conv,
        "conv_transpose2d": convt,
        "maxpool2d": pool,
        "batchnorm2d": bn,
        "bilinear_resize": resize,
        "relu": relu_case,
        "arithmetic/reduction": arithmetic,
    }


@contextlib.contextmanager
def _record_kinks(log):
    """Capture ReLU sign patterns and max-pool winners inside predict_flow."""
    real_relu, real_pool = model_module.relu, model_module.maxpool2d

    def relu_spy(x):
        log.append(x.data > 0)
        return real_relu(x)

    def pool_spy(x):
        b, c, h, w = x.shape
        windows = x.data.reshape(b, c, h // 2, 2, w // 2, 2).transpose(0, 1, 2, 4, 3, 5).reshape(b, c, h // 2, w // 2, 4)
        log.append(windows.argmax(axis=-1))
        return real_pool(x)

    model_module.relu, model_module.maxpool2d = relu_spy, pool_spy
    try:
        yield
    finally:
        model_module.relu, model_module.maxpool2d = real_relu, real_pool


def _kink_pattern(pair, model, config, frames):
    log = []
    with _record_kinks(log):
        flow = predict_flow(Tensor(pair), model, config)
    r = data_residual(frames[0], frames[1], flow).data
    f = flow.data
    log += [r > 0, np.diff(f, axis=2) > 0, np.diff(f, axis=3) > 0]
    return log


def _same_pattern(a, b):
    return len(a) == len(b) and all(np.array_equal(x, y) for x, y in zip(a, b))


def composite_gradient_check(rng, instances=INSTANCES, coords_per_instance=6):
    """Flow net -> energy gradients vs central differences, skipping coordinates near kinks.

    Coordinates are drawn uniformly from the flattened parameter vector and the
    error is norm-relative per instance.
    """
    config = FdnConfig.scaled(depth=2, width=2)
    weights = EnergyWeights(0.2, 0.8, 0.05)
    worst = 0.0
    checked = skipped = 0
    for _ in range(instances):
        size = int(rng.choice([4, 8]))
        frames = rng.random((2, size, size))
        pair = frames[None].copy()
        model = init_model(config, int(rng.integers(0, 2**31)))

        def loss():
            return total_energy(frames[0], frames[1], predict_flow(Tensor(pair), model, config), weights).total.item()

        total_energy(frames[0], frames[1], predict_flow(Tensor(pair), model, config), weights).total.backward()
        params = model.parameters()
        offsets = np.cumsum([0] + [p.data.size for p in params])
        base = _kink_pattern(pair, model, config, frames)
        analytic, numeric = [], []
        for flat_index in rng.choice(offsets[-1], size=coords_per_instance, replace=False):
            i = int(np.searchsorted(offsets, flat_index, side="right") - 1)
            p, k = params[i], int(flat_index - offsets[i])
            flat = p.data.reshape(-1)
            old = flat[k]
            near = False
            for delta in (-KINK, KINK):
                flat[k] = old + delta
                near |= not _same_pattern(base, _kink_pattern(pair, model, config, frames))
            flat[k] = old
            if near:
                skipped += 1
                continue
            analytic.append(p.grad.reshape(-1)[k])
            numeric.append(numeric_grad(lambda _: loss(), [p.data], 0, coords=[k])[0])
        if analytic:
            worst = max(worst, rel_error(analytic, numeric))
            checked += 1
    return worst, checked, skipped


def criterion_1():
    rng = np.random.default_rng(1001)
    parts = []
    ok = True
    for name, make in _op_cases().items():
        worst = 0.0
        for _ in range(INSTANCES):
            fn, arrays = make(rng)
            worst = max(worst, _probe_check(fn, arrays, rng))
        ok &= worst <= GRAD_TOL
        parts.append(f"{name} {worst:.1e}")
    worst, checked, skipped = composite_gradient_check(rng)
    ok &= worst <= GRAD_TOL and checked >= INSTANCES
    parts.append(f"predict_flow->total_energy {worst:.1e} ({checked} instances, {skipped} coords near kinks skipped)")
    return report(1, ok, f"max rel error over {INSTANCES} instances each: " + "; ".join(parts))


# -- criterion 2: energy oracle ------------------------------------------------

def criterion_2():
    rng = np.random.default_rng(2002)
    worst = 0.0
    for _ in range(1000):
        i1, i2 = rng.random((2, 6, 6))
        u, v = rng.normal(scale=2.0, size=(2, 6, 6))
        lams = rng.uniform(0, 1, size=3)
        got = total_energy(i1, i2, Tensor(np.stack([u, v])[None]), EnergyWeights(*lams)).total.item()
        ref = energy_loop(i1.tolist(), i2.tolist(), u.tolist(), v.tolist(), *lams)["total_loss"]
        worst = max(worst, abs(got - ref))
    step_ok = True
    for h, w, col in ((6, 6, 3), (4, 9, 1), (7, 5, 4)):
        u = np.zeros((h, w))
        u[:, col:] = 1.0
        field = Tensor(np.stack([u, np.zeros((h, w))])[None])
        step_ok &= anisotropic_tv(field, reduction="sum").item() == h
        step_ok &= anisotropic_tv(field).item() == h / (h * w)
    ok = worst <= 1e-12 and step_ok
    return report(2, ok, f"max |energy - loop oracle| {worst:.1e} over 1000 6x6 instances; column-step TV exact: {step_ok}")


# -- criterion 3: metric oracle ------------------------------------------------

def criterion_3():
    rng = np.random.default_rng(3003)
    worst = 0.0
    for _ in range(20):
        up, vp, ug, vg = rng.normal(scale=3.0, size=(4, 32, 32))
        r = evaluate(FlowField(up, vp), FlowField(ug, vg))
        ref = metrics_loop(up.tolist(), vp.tolist(), ug.tolist(), vg.tolist())
        worst = max(worst, max(abs(a - b) for a, b in zip((r.aee, r.sdee, r.aae, r.sdae), ref)))
    one = np.ones((1, 1))
    zero = np.zeros((1, 1))
    epe = evaluate(FlowField(3 * one, 4 * one), FlowField(zero, zero)).aee
    angle = evaluate(FlowField(one, zero), FlowField(zero, one)).aae
    # 60 degrees is pi/3 through arccos; the nearest double is one ulp below 60
    ok = worst <= 1e-12 and epe == 5.0 and abs(angle - 60.0) <= 1e-12
    return report(3, ok, f"max |metric - loop oracle| {worst:.1e} on 32x32 fields; (3,4)->{epe!r} px; (1,0)vs(0,1)->{angle!r} deg")


# -- criterion 4: phantom pair and .flo ----------------------------------------

def criterion_4():
    f1, f2, gt = make_phantom_pair(256)
    inside = gt.magnitude() > 0
    err = float(np.abs(warp_image(f2, gt).values - f1.values)[inside].mean())
    rng = np.random.default_rng(4004)
    flow = FlowField(*rng.normal(scale=5, size=(2, 37, 53)).astype(np.float32).astype(np.float64))
    with tempfile.TemporaryDirectory() as tmp:
        a, b = os.path.join(tmp, "a.flo"), os.path.join(tmp, "b.flo")
        write_flo(a, flow)
        back = read_flo(a)
        write_flo(b, back)
        exact = (np.array_equal(back.u, flow.u) and np.array_equal(back.v, flow.v) and filecmp.cmp(a, b, shallow=False))
    ok = err <= 0.02 and exact
    return report(4, ok, f"mean |I2(x+w) - I1(x)| inside discs {err:.2e} (<= 0.02); .flo round trip bit-exact: {exact}")


# -- criterion 5: desk-scale training ------------------------------------------

def criterion_5(out_dir=None):
    with tempfile.TemporaryDirectory() as tmp:
        out_dir = out_dir or tmp
        cfg = ExperimentConfig(phantom_size=64, phantom_shift=2.0, lambda_tv=1e-5, epochs=2000, seed=0,
                               log_every=0, output_dir=out_dir)
        summary = run_experiment(cfg)
        flow = read_flo(os.path.join(out_dir, "flow.flo"))
    up, down = (c.mask((64, 64)) for c in default_circles(64, 2.0, cfg.phantom_edge_width))
    moving = up | down
    _, _, gt = make_phantom_pair(64, default_circles(64, 2.0, cfg.phantom_edge_width))
    aee = float(np.hypot(flow.u - gt.u, flow.v - gt.v)[moving].mean())
    ratio = summary.best_loss / summary.initial_loss
    v_up, v_down = float(flow.v[up].mean()), float(flow.v[down].mean())
    ok = ratio <= 0.01 and aee < 1.0 and v_up < 0 < v_down
    return report(
        5, ok,
        f"best/epoch-1 loss {ratio:.2e} (<= 1e-2, best epoch {summary.best_epoch}); "
        f"AEE on moving discs {aee:.3f} px (< 1); mean v up {v_up:+.3f}, down {v_down:+.3f}",
    )


# -- criterion 6: lambda_tv sweep on a Middlebury-format scene -------------------

def write_synthetic_scene(root, name="Synthetic", shape=(32, 48)):
    """A Middlebury-style scene: frame10.png, frame11.png, flow10.flo.

    A smooth sinusoidal texture background translates by (0.5, 0.25) px and
    a textured square moves by (-1.5, 1.0) px.
    """
    h, w = shape
    scene = Path(root) / name
    scene.mkdir(parents=True, exist_ok=True)
    rows, cols = np.indices(shape, dtype=float)

    def texture(r, c, phase):
        return 0.5 + 0.2 * np.sin(0.45 * c + 0.3 * r + phase) + 0.15 * np.cos(0.25 * r - 0.5 * c + 2 * phase)

    u = np.full(shape, 0.5)
    v = np.full(shape, 0.25)
    square = (rows >= 10) & (rows < 22) & (cols >= 18) & (cols < 30)
    u[square], v[square] = -1.5, 1.0
    # frame 1 at x equals frame 2 at x + w(x): render frame 2 from the moved geometry
    frame1 = np.where(square, texture(rows, cols, 1.0) * 0.8 + 0.15, texture(rows, cols, 0.0))
    moved_square = (rows - 1.0 >= 10) & (rows - 1.0 < 22) & (cols + 1.5 >= 18) & (cols + 1.5 < 30)
    frame2 = np.where(
        moved_square,
        texture(rows - 1.0, cols + 1.5, 1.0) * 0.8 + 0.15,
        texture(rows - 0.25, cols - 0.5, 0.0),
    )
    save_grayscale(scene / "frame10.png", frame1)
    save_grayscale(scene / "frame11.png", frame2)
    write_flo(scene / "flow10.flo", FlowField(u, v))
    return scene


def _sweep_args(scene, out):
    return ["sweep", "--frames", str(scene / "frame10.png"), str(scene / "frame11.png"),
            "--gt", str(scene / "flow10.flo"), "--lambda-tv", "0", "0.001", "0.01",
            "--epochs", "200", "--log-every", "0", "--out", str(out)]


def _tree_bytes(root):
    root = Path(root)
    return {str(p.relative_to(root)): p.read_bytes() for p in sorted(root.rglob("*")) if p.is_file()}


def criterion_6():
    import csv

    with tempfile.TemporaryDirectory() as tmp:
        scene = write_synthetic_scene(Path(tmp) / "data")
        code_a = cli.main(_sweep_args(scene, Path(tmp) / "a"))
        code_b = cli.main(_sweep_args(scene, Path(tmp) / "b"))
        with open(Path(tmp) / "a" / "results.csv") as fh:
            rows = list(csv.DictReader(fh))
        columns_ok = all(c in rows[0] for c in TABLE_COLUMNS) if rows else False
        complete = len(rows) == 3 and all(r["status"] == "ok" and all(r[c] != "" for c in TABLE_COLUMNS) for r in rows)
        artifacts_ok = all(
            (Path(tmp) / "a" / r["run_dir"] / f).is_file()
            for r in rows for f in ("config.json", "log.jsonl", "summary.json", "best.ckpt", "flow.flo", "flow.png")
        )
        identical = _tree_bytes(Path(tmp) / "a") == _tree_bytes(Path(tmp) / "b")
    ok = code_a == code_b == 0 and columns_ok and complete and artifacts_ok and identical
    aees = ", ".join(f"tv={r['lambda_tv']}: AEE {float(r['aee']):.3f}" for r in rows) if complete else "incomplete"
    return report(6, ok, f"3-lambda sweep x 200 epochs, 8 columns: {columns_ok}, artifacts: {artifacts_ok}, "
                         f"rerun byte-identical: {identical} ({aees})")


# -- criterion 7: determinism of every command ---------------------------------

def criterion_7():
    small = ["--depth", "2", "--width", "4", "--epochs", "15", "--log-every", "0"]
    results = {}
    with tempfile.TemporaryDirectory() as tmp:
        tmp = Path(tmp)
        scene = write_synthetic_scene(tmp / "data")
        frames = ["--frames", str(scene / "frame10.png"), str(scene / "frame11.png"), "--gt", str(scene / "flow10.flo")]
        for run in ("a", "b"):
            base = tmp / run
            codes = [
                cli.main(["phantom", "--size", "64", "--out", str(base / "phantom")]),
                cli.main(["train", "--size", "32", "--shift", "1.5", "--out", str(base / "train")] + small),
                cli.main(["train", *frames, "--lambda-tv", "0.01", "--out", str(base / "train_frames")] + small),
                cli.main(["sweep", "--size", "32", "--shift", "1.5", "--lambda-tv", "0", "0.1",
                          "--out", str(base / "sweep")] + small),
                cli.main(["eval", "--flow", str(base / "train_frames" / "flow.flo"), "--gt", str(scene / "flow10.flo"),
                          "--out", str(base / "eval.json")]),
                cli.main(["colorize", "--flow", str(base / "train" / "flow.flo"), "--out", str(base / "color.png")]),
            ]
            results[run] = (codes, _tree_bytes(base))
    same = results["a"][1] == results["b"][1]
    codes_ok = results["a"][0] == results["b"][0] == [0] * 6
    n_files = len(results["a"][1])
    ok = same and codes_ok
    return report(7, ok, f"phantom/train/sweep/eval/colorize rerun twice: {n_files} files bit-identical: {same}")


# -- pytest entry points -------------------------------------------------------

def test_criterion_1_gradients():
    assert criterion_1()


def test_criterion_2_energy_oracle():
    assert criterion_2()


def test_criterion_3_metric_oracle():
    assert criterion_3()


def test_criterion_4_phantom_and_flo():
    assert criterion_4()


def test_criterion_5_training_smoke():
    assert criterion_5()


def test_criterion_6_sweep():
    assert criterion_6()


def test_criterion_7_determinism():
    assert criterion_7()


if __name__ == "__main__":
    checks = [criterion_1, criterion_2, criterion_3, criterion_4, criterion_5, criterion_6, criterion_7]
    selected = {int(a) for a in sys.argv[1:]} or set(range(1, 8))
    outcomes = [check() for i, check in enumerate(checks, 1) if i in selected]
    print()
    for line in RESULTS:
        print(line)
    sys.exit(0 if all(outcomes) else 1)
