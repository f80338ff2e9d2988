import numpy as np
import pytest

import gtex


@pytest.fixture(scope="module")
def quad(tmp_path_factory):
    root = tmp_path_factory.mktemp("quad")
    code, out, err = gtex.cli(["make-fixture", "quad", "-o", str(root)])
    assert code == 0, err
    return root


def test_mesh_and_init(quad):
    mesh = gtex.Mesh.load(quad / "mesh.obj")
    assert mesh.triangle_count > 0
    assert len(mesh.positions) == mesh.vertex_count
    tex = gtex.Texture.init(mesh)
    assert len(tex) == 3 * mesh.triangle_count
    params = tex.parameters()
    assert params.shape[0] == len(tex)
    assert set(tex.triangle_ids()) == set(range(mesh.triangle_count))


def test_render_and_metrics(quad):
    mesh = gtex.Mesh.load(quad / "mesh.obj")
    tex = gtex.Texture.init(mesh)
    cam = gtex.Camera.from_fov(32, 24, 0.9, gtex.look_at([0.2, 0.1, 2.5], [0, 0, 0], [0, 1, 0]))
    a = gtex.render(tex, mesh, cam, threads=1)
    b = gtex.render(tex, mesh, cam, threads=3)
    assert a.shape == (24, 32, 4)
    assert np.array_equal(a, b)
    assert a[..., 3].max() > 0.0
    assert a[0, 0, 3] < a[12, 16, 3]
    assert gtex.psnr(a, a) == gtex.psnr(b, b)
    assert gtex.ssim(a, b) == pytest.approx(1.0)
    assert gtex.iou(a, b) == 1.0


def test_save_load_and_rebind(quad, tmp_path):
    mesh = gtex.Mesh.load(quad / "mesh.obj")
    tex = gtex.Texture.init(mesh)
    tex.save(tmp_path / "t.3dgt")
    back = gtex.Texture.load(tmp_path / "t.3dgt")
    assert len(back) == len(tex)
    assert back.mesh_fingerprint == mesh.fingerprint
    moved, dropped = gtex.rebind(back, mesh)
    assert dropped == 0
    assert moved == back


def test_clamp():
    out = np.asarray(gtex.clamp_barycentric([1.2, -0.1, -0.1]))
    assert out.min() >= 0.0
    assert out.sum() == pytest.approx(1.0)
    inside = [0.2, 0.3, 0.5]
    assert np.array_equal(np.asarray(gtex.clamp_barycentric(inside)), inside)


def test_grad_check():
    report = gtex.grad_check(seed=3, gaussians=4, size=16)
    assert report.checked > 0
    assert report.pass_fraction() >= 0.9
    assert "pass" in str(report).lower()


def test_errors(tmp_path):
    with pytest.raises(RuntimeError):
        gtex.Mesh.load(tmp_path / "missing.obj")
    code, _, err = gtex.cli(["render"])
    assert code != 0
    assert err
