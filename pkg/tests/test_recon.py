import math

import numpy as np
import pytest

from smcodec.channel import ChannelConfig, transmit
from smcodec.cipher import CipherKey, ImageBuffer, KeyMode, encrypt, key_permutation
from smcodec.codec import RowOrder, SamplingConfig, SamplingMode, depacketize, encode, measurement_selector
from smcodec.gpsr import SolverOptions
from smcodec.keyed import derive_seed
from smcodec.linops import ScaledOperator, srm_apply
from smcodec.recon import DEFAULT_SOLVER, build_effective_operator, joint_decode, psnr
from smcodec.wavelet import CoeffVector, dwt2_inverse


def run(img, sr=0.6, plr=0.0, seed=0, quantized=True, packet_size=100, mode=SamplingMode.STANDARD,
        kind="bdct", opts=DEFAULT_SOLVER, row_order=RowOrder.SORTED):
    key = CipherKey(derive_seed(seed, "R"))
    cfg = SamplingConfig(kind=kind, sr=sr, d_seed=derive_seed(seed, "D"), packet_size=packet_size,
                         mode=mode, rprime_seed=derive_seed(seed, "R'"), row_order=row_order)
    packets = encode(encrypt(img, key), cfg, quantized=quantized)
    received = transmit(packets, ChannelConfig(plr, "count", derive_seed(seed, "ch")))
    return joint_decode(received, key, opts, original=img), received, key


def test_effective_operator_full_set(lena_crop):
    key = CipherKey(4)
    packets = encode(encrypt(lena_crop, key), SamplingConfig(sr=0.5, d_seed=3))
    qs, idx = depacketize(packets)
    theta = build_effective_operator(qs.header, idx, key)
    srm = ScaledOperator(qs.header.transform, measurement_selector(qs.header), 1.0, key_permutation(key, lena_crop.n))
    s = np.random.default_rng(0).standard_normal(lena_crop.n)
    x = dwt2_inverse(CoeffVector(s, theta.geometry)).reshape(-1)
    assert np.array_equal(theta.apply(s), srm_apply(srm, x))
    assert theta.shape == (qs.header.M, lena_crop.n)


def test_effective_operator_one_packet_and_adjoint(lena_crop):
    key = CipherKey(5)
    packets = encode(encrypt(lena_crop, key), SamplingConfig(sr=0.5, d_seed=3, packet_size=500))
    qs, idx = depacketize(packets[3:4])
    theta = build_effective_operator(qs.header, idx, key)
    assert theta.shape[0] == 500
    rng = np.random.default_rng(1)
    s, y = rng.standard_normal(lena_crop.n), rng.standard_normal(500)
    lhs, rhs = theta.apply(s) @ y, s @ theta.adjoint(y)
    assert abs(lhs - rhs) <= 1e-9 * abs(lhs)
    with pytest.raises(ValueError):
        build_effective_operator(qs.header, [], key)


def test_secret_subsampler_key(lena_crop):
    key = CipherKey(6, KeyMode.SECRET_SUBSAMPLER, d_seed=77)
    cfg = SamplingConfig(sr=0.7, d_seed=77, publish_d_seed=False)
    packets = encode(encrypt(lena_crop, key), cfg)
    res = joint_decode(packets, key, original=lena_crop)
    assert res.psnr_vs_original > 30
    with pytest.raises(ValueError):
        joint_decode(packets, CipherKey(6), original=lena_crop)


def test_square_system_direct_decode(lena):
    res, _, _ = run(lena, sr=1.0, plr=0.0, quantized=False)
    assert res.direct and res.iterations == 0
    assert res.psnr_vs_original >= 60


def test_full_redundancy_without_loss_is_direct(lena_crop):
    res, _, _ = run(lena_crop, quantized=False, mode=SamplingMode.FULL_REDUNDANCY)
    assert res.direct and res.psnr_vs_original == math.inf


def test_decode_is_deterministic(lena_crop):
    key = CipherKey(8)
    packets = encode(encrypt(lena_crop, key), SamplingConfig(sr=0.5, d_seed=1))[5:]
    a = joint_decode(packets, key)
    b = joint_decode(packets, key)
    assert np.array_equal(a.image.pixels, b.image.pixels)
    assert a.objective_trace == b.objective_trace
    assert a.image.width == lena_crop.width and a.image.height == lena_crop.height


def test_decode_trace_non_increasing(lena_crop):
    res, _, _ = run(lena_crop, sr=0.5, plr=0.1)
    t = np.array(res.objective_trace)
    assert np.all(np.diff(t) <= 1e-12 * t[:-1])


def test_wrong_key_fails_to_decrypt(lena_crop):
    key = CipherKey(9)
    packets = encode(encrypt(lena_crop, key), SamplingConfig(sr=0.6, d_seed=1))
    good = joint_decode(packets, key, original=lena_crop)
    bad = joint_decode(packets, CipherKey(10), original=lena_crop)
    assert good.psnr_vs_original > bad.psnr_vs_original + 15


def test_full_redundancy_contiguous_loss_matches_reduced_sr(lena_crop):
    # losing a contiguous 20% of R'F-ordered measurements behaves like SR 0.8
    key = CipherKey(derive_seed(0, "R"))
    cfg = SamplingConfig(mode=SamplingMode.FULL_REDUNDANCY, packet_size=lena_crop.n // 5, rprime_seed=3)
    packets = encode(encrypt(lena_crop, key), cfg)
    fr = joint_decode(packets[1:], key, original=lena_crop)
    std, _, _ = run(lena_crop, sr=0.8)
    assert abs(fr.psnr_vs_original - std.psnr_vs_original) <= 1.5


# -- statistical properties at crop scale


def test_democracy(lena_crop):
    key = CipherKey(derive_seed(1, "R"))
    packets = encode(encrypt(lena_crop, key), SamplingConfig(sr=0.6, d_seed=derive_seed(1, "D")))
    values = [joint_decode(transmit(packets, ChannelConfig(0.2, "count", s)), key, original=lena_crop).psnr_vs_original
              for s in range(20)]
    assert np.std(values) <= 0.5


@pytest.mark.slow
def test_degradation_monotone_in_plr(lena_crop):
    means = [np.mean([run(lena_crop, plr=b, seed=s)[0].psnr_vs_original for s in range(5)])
             for b in (0.0, 0.1, 0.2, 0.3)]
    assert all(b <= a + 0.2 for a, b in zip(means, means[1:])), means


@pytest.mark.slow
@pytest.mark.parametrize("beta", [0.1, 0.2, 0.3])
def test_equivalence_law(lena_crop, beta):
    lossy = np.mean([run(lena_crop, sr=0.6, plr=beta, seed=s)[0].psnr_vs_original for s in range(5)])
    reduced = np.mean([run(lena_crop, sr=0.6 * (1 - beta), seed=s)[0].psnr_vs_original for s in range(5)])
    assert lossy <= reduced + 0.3
    assert abs(lossy - reduced) <= 1.0, (lossy, reduced)


# -- psnr


def _img(value, n=16):
    return ImageBuffer(4, 4, np.full(n, value, dtype=np.uint8))


def test_psnr_examples():
    assert psnr(_img(3), _img(3)) == math.inf
    assert psnr(_img(0), _img(255)) == pytest.approx(0.0)
    assert psnr(_img(0), _img(16)) == pytest.approx(10 * math.log10(255**2 / 256))
    assert psnr(_img(0), _img(16)) == pytest.approx(24.048, abs=1e-3)
    with pytest.raises(ValueError):
        psnr(_img(0), ImageBuffer(2, 8, np.zeros(16, np.uint8)))
