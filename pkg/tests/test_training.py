"""Adam updates, the lambda projection, the training loop, and the
checkpoint format."""

import math
import struct

import pytest

from symnmf import classical as cl
from symnmf import linalg as la
from symnmf import net
from symnmf.errors import (
    CheckpointError,
    CheckpointShapeError,
    CheckpointTruncatedError,
    CheckpointVersionError,
)

from util import mat, rand_nonneg, rand_sym_psd


def _scalar_params(p0, lam=1.0):
    return net.NetParams([mat([[p0]])], lam)


def _scalar_grads(g, d_lambda=0.0):
    return net.NetGrads([mat([[g]])], d_lambda, None)


def test_adam_first_step_scalar_formula():
    """t=1 bias correction cancels the moment decay, so the update is
    -lr * g / (|g| + eps)."""
    cfg = net.TrainConfig(num_blocks=1, lr=0.05)
    params = _scalar_params(2.0)
    state = net.AdamState.zeros_like(params)
    g = 0.37
    new_params, new_state = net.adam_step(params, _scalar_grads(g), state, cfg)
    want = 2.0 - 0.05 * g / (abs(g) + cfg.adam_eps)
    assert abs(new_params.blocks[0].get(0, 0) - want) < 1e-12
    assert new_state.step == 1


def test_adam_zero_gradient_is_noop():
    cfg = net.TrainConfig(num_blocks=1, lr=0.5)
    params = _scalar_params(3.0, lam=2.0)
    state = net.AdamState.zeros_like(params)
    new_params, new_state = net.adam_step(params, _scalar_grads(0.0, 0.0), state, cfg)
    assert new_params.blocks[0].tobytes() == params.blocks[0].tobytes()
    assert new_params.lam == params.lam
    assert new_state.step == 1
    assert la.max_abs_entry(new_state.m_blocks[0]) == 0.0
    assert la.max_abs_entry(new_state.v_blocks[0]) == 0.0


def test_adam_moments_decay_toward_zero():
    """After a nonzero step, zero gradients shrink the moments geometrically."""
    cfg = net.TrainConfig(num_blocks=1, lr=0.1)
    params = _scalar_params(1.0)
    state = net.AdamState.zeros_like(params)
    params, state = net.adam_step(params, _scalar_grads(1.0), state, cfg)
    m1 = state.m_blocks[0].get(0, 0)
    params, state = net.adam_step(params, _scalar_grads(0.0), state, cfg)
    m2 = state.m_blocks[0].get(0, 0)
    assert abs(m2 - cfg.adam_beta1 * m1) < 1e-15
    assert state.step == 2


def test_adam_deterministic():
    cfg = net.TrainConfig(num_blocks=1, lr=0.2)
    params = _scalar_params(1.5, lam=3.0)
    state = net.AdamState.zeros_like(params)
    grads = _scalar_grads(-0.7, 0.3)
    a_params, a_state = net.adam_step(params, grads, state, cfg)
    b_params, b_state = net.adam_step(params, grads, state, cfg)
    assert a_params.blocks[0].tobytes() == b_params.blocks[0].tobytes()
    assert a_params.lam == b_params.lam
    assert a_state.m_lam == b_state.m_lam


def test_adam_updates_lambda_with_same_formula():
    cfg = net.TrainConfig(num_blocks=1, lr=0.05)
    params = _scalar_params(1.0, lam=2.0)
    state = net.AdamState.zeros_like(params)
    new_params, _ = net.adam_step(params, _scalar_grads(0.0, 0.5), state, cfg)
    want = 2.0 - 0.05 * 0.5 / (0.5 + cfg.adam_eps)
    assert abs(new_params.lam - want) < 1e-12


def test_adam_lambda_floor():
    """A huge positive lambda gradient cannot push lambda to zero or below."""
    cfg = net.TrainConfig(num_blocks=1, lr=100.0)
    params = _scalar_params(1.0, lam=1e-9)
    state = net.AdamState.zeros_like(params)
    new_params, _ = net.adam_step(params, _scalar_grads(0.0, 1e6), state, cfg)
    assert new_params.lam == 1e-12


def test_adam_custom_lr_argument():
    cfg = net.TrainConfig(num_blocks=1, lr=0.5)
    params = _scalar_params(1.0)
    state = net.AdamState.zeros_like(params)
    new_params, _ = net.adam_step(params, _scalar_grads(1.0), state, cfg, lr=0.01)
    want = 1.0 - 0.01 * 1.0 / (1.0 + cfg.adam_eps)
    assert abs(new_params.blocks[0].get(0, 0) - want) < 1e-12


def test_project_lambda_noop_above_bound():
    x = la.DenseMatrix.zeros(2, 2)
    u0 = la.DenseMatrix.zeros(2, 1)
    assert net.project_lambda(10.0, x, u0, 1.0, 0.1) == 10.0


def test_project_lambda_proximality_branch():
    """Zero matrix, a=1, eps=0.1: bound is 1 + 0.4 = 1.4 plus the margin."""
    x = la.DenseMatrix.zeros(2, 2)
    u0 = la.DenseMatrix.zeros(2, 1)
    got = net.project_lambda(0.0, x, u0, 1.0, 0.1)
    assert abs(got - (1.4 + 1e-6)) < 1e-12


def test_project_lambda_sufficiency_branch():
    """||X||_F = 10 with u0 = 0 and a = eps = 0: bound is (10+10)/2 = 10."""
    x = mat([[10.0]])
    u0 = la.DenseMatrix.zeros(1, 1)
    got = net.project_lambda(0.0, x, u0, 0.0, 0.0)
    assert abs(got - (10.0 + 1e-6)) < 1e-12


def test_train_config_validation():
    with pytest.raises(ValueError):
        net.TrainConfig(num_blocks=0)
    with pytest.raises(ValueError):
        net.TrainConfig(lr=0.0)
    with pytest.raises(ValueError):
        net.TrainConfig(lr_decay=0.0)
    with pytest.raises(ValueError):
        net.TrainConfig(epochs=-1)
    with pytest.raises(ValueError):
        net.TrainConfig(beta=-1e-9)
    with pytest.raises(ValueError):
        net.TrainConfig(adam_beta1=1.0)
    with pytest.raises(ValueError):
        net.TrainConfig(lambda_override=0.0)


def test_train_epochs_zero_returns_init():
    x = rand_sym_psd(8, 2, seed=0)
    u0 = cl.random_factor(x, 2, seed=1)
    cfg = net.TrainConfig(num_blocks=3, epochs=0)
    params, trace = net.train(x, u0, cfg)
    lam0 = la.fro_norm(x)
    ref = net.init_params(x, u0, lam0, 3)
    assert params.lam == lam0
    for got, want in zip(params.blocks, ref.blocks):
        assert got.tobytes() == want.tobytes()
    assert len(trace) == 1
    assert trace.records[0].iteration == 0
    assert trace.records[0].lam == lam0


def test_train_trace_one_record_per_epoch():
    x = rand_sym_psd(8, 2, seed=2)
    u0 = cl.random_factor(x, 2, seed=3)
    cfg = net.TrainConfig(num_blocks=2, epochs=4)
    _, trace = net.train(x, u0, cfg)
    assert len(trace) == 5
    assert [rec.iteration for rec in trace] == [0, 1, 2, 3, 4]
    for rec in trace:
        assert rec.lam is not None and rec.lam > 0.0


def test_train_determinism():
    x = rand_sym_psd(10, 2, seed=4)
    u0 = cl.random_factor(x, 2, seed=5)
    cfg = net.TrainConfig(num_blocks=3, epochs=6)
    p1, t1 = net.train(x, u0, cfg)
    p2, t2 = net.train(x, u0, cfg)
    assert p1.lam == p2.lam
    for a, b in zip(p1.blocks, p2.blocks):
        assert a.tobytes() == b.tobytes()
    assert t1.errors() == t2.errors()
    assert [r.lam for r in t1] == [r.lam for r in t2]
    assert [r.u_fro for r in t1] == [r.u_fro for r in t2]


def test_train_improves_on_planted_instance():
    from symnmf import graph

    inst = graph.synth_planted(24, 3, 0.02, seed=6)
    u0 = cl.random_factor(inst.x, 3, seed=7)
    cfg = net.TrainConfig(num_blocks=6, epochs=60)
    _, trace = net.train(inst.x, u0, cfg)
    errs = trace.errors()
    assert errs[-1] < errs[0]


def test_train_lambda_override_is_fixed():
    x = rand_sym_psd(8, 2, seed=8)
    u0 = cl.random_factor(x, 2, seed=9)
    cfg = net.TrainConfig(num_blocks=2, epochs=5, lambda_override=7.5)
    params, trace = net.train(x, u0, cfg)
    assert params.lam == 7.5
    assert all(rec.lam == 7.5 for rec in trace)


def test_train_projection_keeps_lambda_above_sufficiency_bound():
    x = rand_sym_psd(8, 2, seed=10)
    u0 = cl.random_factor(x, 2, seed=11)
    cfg = net.TrainConfig(num_blocks=2, epochs=8)
    params, _ = net.train(x, u0, cfg)
    resid = la.add_scaled(x, la.matmul(u0, la.transpose(u0)), -1.0)
    suff = 0.5 * (la.fro_norm(x) + la.fro_norm(resid))
    assert params.lam > suff


def test_train_no_projection_lets_lambda_fall():
    """Without projection, Adam drags lambda below the bound on at least
    some instances; with projection it cannot happen."""
    x = rand_sym_psd(8, 2, seed=12)
    u0 = cl.random_factor(x, 2, seed=13)
    resid = la.add_scaled(x, la.matmul(u0, la.transpose(u0)), -1.0)
    suff = 0.5 * (la.fro_norm(x) + la.fro_norm(resid))
    off = net.TrainConfig(num_blocks=2, epochs=30, lambda_projection=False)
    params_off, _ = net.train(x, u0, off)
    on = net.TrainConfig(num_blocks=2, epochs=30, lambda_projection=True)
    params_on, _ = net.train(x, u0, on)
    assert params_on.lam > suff
    # the unprojected run must have moved lambda freely
    assert params_off.lam != params_on.lam


def test_train_rejects_bad_inputs():
    x = rand_sym_psd(6, 2, seed=14)
    u0 = cl.random_factor(x, 2, seed=15)
    bad_u0 = u0.copy()
    bad_u0.set(0, 0, -1.0)
    with pytest.raises(ValueError):
        net.train(x, bad_u0, net.TrainConfig(num_blocks=1, epochs=1))
    asym = x.copy()
    asym.set(0, 1, asym.get(0, 1) + 1.0)
    with pytest.raises(ValueError):
        net.train(asym, u0, net.TrainConfig(num_blocks=1, epochs=1))
    with pytest.raises(ValueError):
        net.train(la.DenseMatrix.zeros(6, 6), u0, net.TrainConfig(num_blocks=1, epochs=1))


# -- checkpoint format --


def _tiny_params():
    blocks = [mat([[1.5, -2.0], [0.25, 3.0], [0.0, 7.0]]),
              mat([[9.0, 8.0], [7.0, 6.0], [5.0, 4.0]])]
    return net.NetParams(blocks, 2.75)


def test_checkpoint_round_trip_bit_identical(tmp_path):
    params = _tiny_params()
    path = tmp_path / "w.bin"
    net.save_checkpoint(params, path)
    loaded = net.load_checkpoint(path)
    assert loaded.lam == params.lam
    assert len(loaded.blocks) == 2
    for a, b in zip(loaded.blocks, params.blocks):
        assert a.tobytes() == b.tobytes()


def test_checkpoint_exact_byte_layout(tmp_path):
    """The on-disk layout is normative: magic, version byte, little-endian
    u32 dims, little-endian f64 lam, then row-major f64 blocks."""
    params = _tiny_params()
    path = tmp_path / "w.bin"
    net.save_checkpoint(params, path)
    raw = path.read_bytes()
    want = struct.pack("<4sBIIId", b"SYMN", 1, 3, 2, 2, 2.75)
    for blk in params.blocks:
        want += struct.pack("<6d", *blk.data)
    assert raw == want


def test_checkpoint_empty_file(tmp_path):
    path = tmp_path / "empty.bin"
    path.write_bytes(b"")
    with pytest.raises(CheckpointTruncatedError):
        net.load_checkpoint(path)


def test_checkpoint_bad_magic(tmp_path):
    path = tmp_path / "bad.bin"
    path.write_bytes(struct.pack("<4sBIIId", b"NOPE", 1, 1, 1, 1, 1.0) + b"\0" * 8)
    with pytest.raises(CheckpointError):
        net.load_checkpoint(path)


def test_checkpoint_version_mismatch(tmp_path):
    path = tmp_path / "v9.bin"
    path.write_bytes(struct.pack("<4sBIIId", b"SYMN", 9, 1, 1, 1, 1.0) + b"\0" * 8)
    with pytest.raises(CheckpointVersionError):
        net.load_checkpoint(path)


def test_checkpoint_zero_dimension(tmp_path):
    path = tmp_path / "dim0.bin"
    path.write_bytes(struct.pack("<4sBIIId", b"SYMN", 1, 0, 1, 1, 1.0))
    with pytest.raises(CheckpointShapeError):
        net.load_checkpoint(path)


def test_checkpoint_truncated_payload(tmp_path):
    params = _tiny_params()
    path = tmp_path / "cut.bin"
    net.save_checkpoint(params, path)
    raw = path.read_bytes()
    path.write_bytes(raw[:-8])
    with pytest.raises(CheckpointTruncatedError):
        net.load_checkpoint(path)


def test_checkpoint_trailing_bytes(tmp_path):
    params = _tiny_params()
    path = tmp_path / "fat.bin"
    net.save_checkpoint(params, path)
    path.write_bytes(path.read_bytes() + b"\0")
    with pytest.raises(CheckpointShapeError):
        net.load_checkpoint(path)


def test_checkpoint_invalid_lambda(tmp_path):
    path = tmp_path / "lam.bin"
    payload = struct.pack("<1d", 1.0)
    path.write_bytes(struct.pack("<4sBIIId", b"SYMN", 1, 1, 1, 1, -3.0) + payload)
    with pytest.raises(CheckpointError):
        net.load_checkpoint(path)
    path.write_bytes(
        struct.pack("<4sBIIId", b"SYMN", 1, 1, 1, 1, math.inf) + payload
    )
    with pytest.raises(CheckpointError):
        net.load_checkpoint(path)


def test_checkpoint_error_types_are_value_errors():
    assert issubclass(CheckpointTruncatedError, CheckpointError)
    assert issubclass(CheckpointVersionError, CheckpointError)
    assert issubclass(CheckpointShapeError, CheckpointError)
    assert issubclass(CheckpointError, ValueError)


def test_checkpoint_after_training_round_trips(tmp_path):
    x = rand_sym_psd(7, 2, seed=16)
    u0 = cl.random_factor(x, 2, seed=17)
    params, _ = net.train(x, u0, net.TrainConfig(num_blocks=2, epochs=3))
    path = tmp_path / "trained.bin"
    net.save_checkpoint(params, path)
    loaded = net.load_checkpoint(path)
    assert loaded.lam == params.lam
    for a, b in zip(loaded.blocks, params.blocks):
        assert a.tobytes() == b.tobytes()
