"""
Invariant battery run by ``manage.py self-check``.

Each check is a function that raises ``AssertionError`` (or any exception)
on failure and returns a short detail string on success.
"""
import logging
import time
from dataclasses import dataclass

import numpy as np
import torch
from torch.autograd import gradcheck

from .affm import DeepLayerAttention
from .backbone import RES2NET50_SHAPED_STUB, STUB
from .cfdm import BranchInteraction, DecoderConfig, residual_merge, split4
from .config import PROFILES
from .frm import FeatureRefinement
from .losses import dice_loss, total_loss, weighted_bce, weighted_iou
from .metrics import mae, score_pair
from .network import AblationVariant, NetworkOutputs, PFRNet
from .training import learning_rate

logger = logging.getLogger(__name__)


@dataclass
class CheckResult:
    name: str
    passed: bool
    detail: str
    seconds: float


def check_shapes():
    torch.manual_seed(0)
    model = PFRNet(RES2NET50_SHAPED_STUB).eval()
    with torch.no_grad():
        outputs = model(torch.randn(1, 3, 352, 352))
    expected = {'o1': 88, 'o2': 44, 'o3': 22, 'o4': 44, 'ggi': 44}
    for name, side in expected.items():
        shape = tuple(getattr(outputs, name).shape)
        assert shape == (1, 1, side, side), f'{name} is {shape}, expected (1, 1, {side}, {side})'
    return 'O1 88, O2 44, O3 22, O4 44, GGI 44'


def check_dla_identity():
    generator = torch.Generator().manual_seed(0)
    dla = DeepLayerAttention()
    for _ in range(100):
        x1, x2, x3 = (torch.randn(2, 4, 3, 3, generator=generator) for _ in range(3))
        assert torch.equal(dla(x1, x2, x3), torch.cat([x1, x2, x3], dim=1)), 'beta=0 output is not the concatenation'
        sums = dla.attention(x1, x2, x3).sum(dim=1)
        assert torch.allclose(sums, torch.ones_like(sums), atol=1e-6), 'attention columns do not sum to 1'
    return '100 random inputs'


def check_guidance_algebra():
    torch.manual_seed(0)
    refine = FeatureRefinement(16, level=2).eval()
    f = torch.randn(1, 16, 8, 8)
    with torch.no_grad():
        guided = refine(f, torch.ones(1, 1, 8, 8))
        plain = refine(f)
        assert torch.allclose(guided, plain, atol=1e-6), 'GGI=1 differs from the no-guidance path'
        gated = refine.gated(f, torch.zeros(1, 1, 8, 8))
        assert torch.count_nonzero(gated) == 0, 'GGI=0 does not zero g_refine'
    return 'GGI=1 identity, GGI=0 annihilation'


def check_split_concat():
    y = torch.randn(2, 256, 8, 8)
    assert torch.equal(torch.cat(split4(y), dim=1), y), 'concat(split4(y)) != y'
    merged = residual_merge(BranchInteraction().eval()(split4(y)), split4(y), DecoderConfig(lam=0.0))
    assert torch.equal(merged, y), 'lambda=0 merge does not reconstruct y'
    return 'partition and lambda=0 identities'


def check_dependency_isolation():
    """z1 ignores y3 and y4, z2 ignores y4, y1 reaches every branch."""
    torch.manual_seed(0)
    interaction = BranchInteraction().eval()
    y = torch.randn(1, 256, 8, 8)

    def branches(x):
        with torch.no_grad():
            return interaction(split4(x))

    base = branches(y)

    def perturbed(start, stop):
        bumped = y.clone()
        bumped[:, start:stop] += 1e-2
        return branches(bumped)

    z = perturbed(128, 256)
    assert torch.equal(z[0], base[0]), 'z1 depends on y3 or y4'
    z = perturbed(192, 256)
    assert torch.equal(z[1], base[1]), 'z2 depends on y4'
    z = perturbed(0, 64)
    for index in range(4):
        assert not torch.equal(z[index], base[index]), f'y1 does not reach z{index + 1}'
    return 'z1 _|_ {y3, y4}, z2 _|_ y4'


def check_loss_gradients():
    generator = torch.Generator().manual_seed(0)
    gt = (torch.rand(2, 1, 4, 4, generator=generator) > 0.5).double()
    logits = torch.randn(2, 1, 4, 4, dtype=torch.float64, generator=generator, requires_grad=True)
    for loss in (dice_loss, weighted_bce, weighted_iou):
        assert gradcheck(lambda x: loss(x, gt), (logits,), eps=1e-5, atol=1e-8, rtol=1e-4), loss.__name__

    maps = [torch.randn(2, 1, 4, 4, dtype=torch.float64, generator=generator, requires_grad=True) for _ in range(4)]

    def total(o1, o2, o3, o4):
        return total_loss(NetworkOutputs(o1, o2, o3, o4, torch.sigmoid(o4)), gt)

    assert gradcheck(total, tuple(maps), eps=1e-5, atol=1e-8, rtol=1e-4), 'total_loss'
    return 'dice, weighted BCE, weighted IoU, total'


def check_metric_oracles():
    pred = np.array([[0, 0.5], [1, 0.25]])
    gt = np.array([[0, 1], [1, 0]], dtype=bool)
    assert mae(pred, gt) == 0.1875, f'worked MAE example gave {mae(pred, gt)}'

    rng = np.random.default_rng(0)
    for _ in range(50):
        pred, gt = rng.random((16, 16)), rng.random((16, 16)) > 0.5
        total = 0.0
        for i in range(16):
            for j in range(16):
                total += abs(pred[i, j] - float(gt[i, j]))
        assert abs(mae(pred, gt) - total / 256) < 1e-9, 'MAE disagrees with brute force'

    gt = np.zeros((32, 32), dtype=bool)
    gt[8:20, 10:26] = True
    scores = score_pair(gt.astype(np.float64), gt)
    ideal = {'s_alpha': 1.0, 'e_phi': 1.0, 'f_beta_w': 1.0, 'mae': 0.0}
    for name, value in ideal.items():
        assert abs(scores[name] - value) <= 1e-3, f'{name} of a perfect map is {scores[name]}'
    return 'MAE oracle, brute force, perfect map'


def check_schedule():
    config = PROFILES['full']
    trace = [learning_rate(config, epoch) for epoch in (0, 49, 50, 100)]
    assert trace == [1e-4, 1e-4, 1e-5, 1e-6], f'learning rates {trace}'
    return '1e-4 / 1e-5 / 1e-6 at epochs 1, 51, 101'


def check_reachability():
    torch.manual_seed(0)
    model = PFRNet(STUB).train()
    image = torch.randn(2, 3, 64, 64)
    gt = (torch.rand(2, 1, 64, 64) > 0.5).float()
    total_loss(model(image), gt).backward()
    params = [p for p in model.parameters() if p.requires_grad]
    reached = sum(p.grad is not None and bool(torch.any(p.grad != 0)) for p in params)
    share = reached / len(params)
    assert share >= 0.99, f'only {share:.1%} of parameters receive gradient'
    return f'{reached}/{len(params)} parameters'


def check_variants():
    torch.manual_seed(0)
    for variant in AblationVariant:
        model = PFRNet(STUB, variant).eval()
        with torch.no_grad():
            outputs = model(torch.randn(2, 3, 64, 64))
        assert tuple(outputs.o1.shape) == (2, 1, 16, 16), f'{variant.letter}: O1 {tuple(outputs.o1.shape)}'
        if not variant.use_affm:
            assert torch.all(outputs.ggi == 0.5), f'{variant.letter}: GGI is not 0.5'
    return 'A-E'


CHECKS = (
    ('shapes', check_shapes),
    ('dla_identity', check_dla_identity),
    ('guidance_algebra', check_guidance_algebra),
    ('split_concat', check_split_concat),
    ('dependency_isolation', check_dependency_isolation),
    ('loss_gradients', check_loss_gradients),
    ('metric_oracles', check_metric_oracles),
    ('schedule', check_schedule),
    ('reachability', check_reachability),
    ('variants', check_variants),
)


def run_self_check(names=None):
    results = []
    for name, check in CHECKS:
        if names and name not in names:
            continue
        started = time.monotonic()
        try:
            detail, passed = check(), True
        except Exception as exc:
            logger.exception('Self-check %s failed', name)
            detail, passed = f'{type(exc).__name__}: {exc}', False
        results.append(CheckResult(name, passed, detail, time.monotonic() - started))
    return results
