"""Tests for chain validation, the state layout and the error chart."""

import sys
from pathlib import Path

import numpy as np
import pytest
from numpy.testing import assert_allclose

ROOT = Path(__file__).resolve().parent.parent
sys.path.insert(0, str(ROOT))


def test_arm_layout_census():
    """Three-link arm: 60 error entries, 63 state entries, 27 motion variables."""
    from core.body.layout import build_layout
    from core.body.model import arm_chain

    layout = build_layout(arm_chain())
    assert layout.error_dim == 60
    assert layout.state_dim == 63
    assert layout.census() == (27, 33)


def test_layout_order():
    """Per-link blocks, then owned segments, with the camera lever arm last."""
    from core.body.layout import build_layout
    from core.body.model import arm_chain

    layout = build_layout(arm_chain())
    symbols = [row[0] for row in layout.slice_table()]
    assert symbols[:6] == ["p[0]", "v[0]", "q[0]", "b_a[0]", "b_g[0]", "l[0,1]"]
    assert symbols[6:13] == ["p[1]", "v[1]", "q[1]", "b_a[1]", "b_g[1]", "l[1,0]", "l[1,2]"]
    assert symbols[-1] == "l_c"
    assert layout.error_camera == slice(57, 60)
    assert layout.state_links[0].att == slice(6, 10)

    covered = np.zeros(layout.error_dim, dtype=int)
    for _, _, e in layout.slice_table():
        covered[e] += 1
    assert np.all(covered == 1)


def test_single_link_layout():
    """One link without joints: 15 link entries plus the lever arm."""
    from core.body.layout import build_layout
    from core.body.model import single_link

    layout = build_layout(single_link())
    assert layout.error_dim == 18
    assert layout.state_dim == 19
    assert layout.segments == []


@pytest.mark.parametrize("links, joints, camera, match", [
    (3, [(0, 1)], 0, "exactly 2 joints"),
    (3, [(0, 1), (0, 1)], 0, "duplicate"),
    (3, [(0, 1), (1, 1)], 0, "itself"),
    (3, [(0, 1), (1, 3)], 0, "missing link"),
    (2, [(0, 1)], 2, "camera link"),
    (4, [(0, 1), (1, 0), (2, 3)], 0, "duplicate"),
])
def test_invalid_chains_rejected(links, joints, camera, match):
    """Malformed topologies raise ChainModelError."""
    from core.body.model import ChainModel, LinkSpec
    from core.exceptions import ChainModelError

    with pytest.raises(ChainModelError, match=match):
        ChainModel(links=tuple(LinkSpec(k, f"l{k}") for k in range(links)), joints=tuple(joints),
                   camera_link=camera)


def test_disconnected_chain_rejected():
    """A cycle plus an isolated link has the right joint count but is not a tree."""
    from core.body.model import ChainModel, LinkSpec
    from core.exceptions import ChainModelError

    with pytest.raises(ChainModelError):
        ChainModel(links=tuple(LinkSpec(k, f"l{k}") for k in range(4)),
                   joints=((0, 1), (1, 2), (2, 0)), camera_link=0)


def test_chain_queries():
    """Neighbours, joint lookup in either orientation, traversal from the camera link."""
    from core.body.model import arm_chain
    from core.exceptions import UnknownJointError

    model = arm_chain()
    assert model.neighbours(1) == [0, 2]
    assert model.joint_index((2, 1)) == 1
    assert model.segments_of(1) == [(1, 0), (1, 2)]
    assert model.parent(2) == 1 and model.parent(0) is None
    assert model.traversal_order() == [0, 1, 2]
    with pytest.raises(UnknownJointError):
        model.joint_index((0, 2))


def test_chain_json_round_trip(tmp_path):
    """A chain written as JSON loads back equal."""
    from core.body.model import ChainModel, arm_chain

    model = arm_chain()
    path = tmp_path / "chain.json"
    path.write_text(model.to_json(), encoding="utf-8")
    assert ChainModel.from_file(path) == model


def test_inject_retract_inverse():
    """(x ⊕ e) ⊖ x = e for errors inside the chart."""
    from core.body.layout import build_layout
    from core.body.model import arm_chain
    from core.body.state import NavState, inject_error, retract_error
    from core.harness.checks.jacobians import random_state

    layout = build_layout(arm_chain())
    rng = np.random.default_rng(0)
    x = random_state(layout, rng)
    e = rng.normal(0.0, 0.3, layout.error_dim)
    y = inject_error(x, e)
    assert isinstance(y, NavState)
    assert_allclose(retract_error(y, x), e, atol=1e-12)
    assert_allclose(retract_error(x, x), 0.0, atol=1e-12)


def test_inject_rotates_in_navigation_frame():
    """The attitude error left-multiplies: q <- exp(φ) ⊗ q."""
    from core.body.layout import build_layout
    from core.body.model import single_link
    from core.body.state import NavState, inject_error
    from core.rotation import quat_mul, rotvec_to_quat

    layout = build_layout(single_link())
    x = NavState.identity(layout)
    q0 = rotvec_to_quat(np.array([0.0, 0.5, 0.0]))
    x.set_q(0, q0)
    e = np.zeros(layout.error_dim)
    phi = np.array([0.1, 0.0, 0.0])
    e[layout.error_links[0].att] = phi
    assert_allclose(inject_error(x, e).q(0), quat_mul(rotvec_to_quat(phi), q0), atol=1e-12)


def test_inject_batch_broadcasts():
    """One state against a stack of errors gives a stack of states."""
    from core.body.layout import build_layout
    from core.body.model import arm_chain
    from core.body.state import NavState, inject_batch, retract_batch

    layout = build_layout(arm_chain())
    x = NavState.identity(layout)
    E = np.random.default_rng(1).normal(0.0, 0.1, (7, layout.error_dim))
    X = inject_batch(layout, x.vec, E)
    assert X.shape == (7, layout.state_dim)
    assert_allclose(retract_batch(layout, X, x.vec), E, atol=1e-12)


def test_inject_rejects_wrong_length():
    """Error vectors must match the layout."""
    from core.body.layout import build_layout
    from core.body.model import arm_chain
    from core.body.state import NavState, inject_error
    from core.exceptions import DimensionMismatchError

    x = NavState.identity(build_layout(arm_chain()))
    with pytest.raises(DimensionMismatchError):
        inject_error(x, np.zeros(59))
