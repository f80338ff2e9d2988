#include "gtex/camera.hpp"
#include "gtex/cli.hpp"
#include "gtex/diff.hpp"
#include "gtex/gaussian_texture.hpp"
#include "gtex/mesh.hpp"
#include "gtex/metrics.hpp"
#include "gtex/projection.hpp"
#include "gtex/renderer.hpp"
#include "gtex/shell_map.hpp"

#include <pybind11/eigen.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <sstream>

namespace py = pybind11;
using namespace gtex;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

Array to_numpy(const ImageRGBA& img) {
  Array out({img.height, img.width, 4});
  std::copy(img.data.begin(), img.data.end(), out.mutable_data());
  return out;
}

ImageRGBA from_numpy(const Array& a) {
  if (a.ndim() != 3 || (a.shape(2) != 3 && a.shape(2) != 4)) {
    throw py::value_error("expected an (H, W, 3) or (H, W, 4) array");
  }
  const int h = static_cast<int>(a.shape(0)), w = static_cast<int>(a.shape(1));
  const int c = static_cast<int>(a.shape(2));
  ImageRGBA img(w, h, 1.0);
  auto v = a.unchecked<3>();
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      for (int k = 0; k < c; ++k) img.at(x, y, k) = v(y, x, k);
    }
  }
  return img;
}

}  // namespace

PYBIND11_MODULE(_gtex, m) {
  m.doc() = "Gaussian textures bound to UV-mapped proxy meshes";
  py::register_exception<Error>(m, "Error", PyExc_RuntimeError);

  py::class_<ProxyMesh>(m, "Mesh")
      .def_static("load", &load_proxy_mesh, py::arg("path"))
      .def("save", [](const ProxyMesh& mesh, const std::filesystem::path& p) { write_obj(mesh, p); })
      .def_property_readonly("vertex_count", &ProxyMesh::vertex_count)
      .def_property_readonly("triangle_count", &ProxyMesh::triangle_count)
      .def_property_readonly("positions", [](const ProxyMesh& mesh) { return mesh.positions; })
      .def_property_readonly("normals", [](const ProxyMesh& mesh) { return mesh.normals; })
      .def_property_readonly("omega", [](const ProxyMesh& mesh) { return mesh.omega_vert; })
      .def_property_readonly("fingerprint", [](const ProxyMesh& mesh) { return mesh_fingerprint(mesh); })
      .def("__repr__", [](const ProxyMesh& mesh) { return mesh_report(mesh); });

  py::class_<GaussianTexture>(m, "Texture")
      .def_static("load", py::overload_cast<const std::filesystem::path&>(&load), py::arg("path"))
      .def_static("init", [](const ProxyMesh& mesh) { return init_gaussians(mesh); })
      .def("save", [](const GaussianTexture& gt, const std::filesystem::path& p) { save(gt, p); })
      .def("__len__", &GaussianTexture::size)
      .def("__eq__", [](const GaussianTexture& a, const GaussianTexture& b) { return a == b; })
      .def_readonly("sh_degree", &GaussianTexture::sh_degree)
      .def_readonly("mesh_fingerprint", &GaussianTexture::mesh_fingerprint)
      .def("parameters", [](const GaussianTexture& gt) {
        const int p = gt.params_per_gaussian();
        Array out({static_cast<py::ssize_t>(gt.size()), static_cast<py::ssize_t>(p)});
        double* d = out.mutable_data();
        for (std::size_t i = 0; i < gt.size(); ++i) {
          for (int k = 0; k < p; ++k) d[i * p + k] = gt.gaussians[i].param(k);
        }
        return out;
      })
      .def("triangle_ids", [](const GaussianTexture& gt) {
        std::vector<std::uint32_t> ids;
        for (const auto& g : gt.gaussians) ids.push_back(g.tri_id);
        return ids;
      });

  py::class_<Camera>(m, "Camera")
      .def_static("from_fov", &Camera::from_fov, py::arg("width"), py::arg("height"),
                  py::arg("fov_x"), py::arg("world_to_camera"))
      .def_readwrite("width", &Camera::width)
      .def_readwrite("height", &Camera::height)
      .def_readwrite("fx", &Camera::fx)
      .def_readwrite("fy", &Camera::fy)
      .def_readwrite("world_to_camera", &Camera::world_to_camera)
      .def_property_readonly("center", &Camera::center);

  m.def("look_at", &look_at, py::arg("eye"), py::arg("target"), py::arg("up"));

  m.def(
      "render",
      [](const GaussianTexture& gt, const ProxyMesh& mesh, const Camera& cam, const Vec3& bg,
         int threads) {
        RenderSettings s;
        s.threads = threads;
        ImageRGBA img;
        {
          py::gil_scoped_release release;
          img = render(world_gaussians(gt, mesh), cam, bg, s);
        }
        return to_numpy(img);
      },
      py::arg("texture"), py::arg("mesh"), py::arg("camera"),
      py::arg("background") = Vec3::Zero(), py::arg("threads") = 0,
      "Render to an (H, W, 4) array; channel 3 is accumulated alpha.");

  m.def("rebind", [](const GaussianTexture& gt, const ProxyMesh& target) {
    auto r = rebind(gt, target);
    return py::make_tuple(r.texture, r.dropped);
  });

  m.def("psnr", [](const Array& a, const Array& b) { return psnr(from_numpy(a), from_numpy(b)); });
  m.def("ssim", [](const Array& a, const Array& b) { return ssim(from_numpy(a), from_numpy(b)); });
  m.def(
      "iou",
      [](const Array& a, const Array& b, double t) { return iou(from_numpy(a), from_numpy(b), t); },
      py::arg("a"), py::arg("b"), py::arg("threshold") = 0.5);

  m.def("clamp_barycentric", &clamp_barycentric, py::arg("phi"));

  py::class_<GradCheckReport>(m, "GradCheckReport")
      .def_readonly("checked", &GradCheckReport::checked)
      .def_readonly("excluded", &GradCheckReport::excluded)
      .def_readonly("passed", &GradCheckReport::passed)
      .def("pass_fraction", &GradCheckReport::pass_fraction)
      .def("__str__", &GradCheckReport::text);

  m.def(
      "grad_check",
      [](std::uint64_t seed, int gaussians, int size, double h) {
        py::gil_scoped_release release;
        return grad_check(random_scene(seed, gaussians, size), h);
      },
      py::arg("seed") = 0, py::arg("gaussians") = 10, py::arg("size") = 32, py::arg("h") = 1e-4);

  m.def(
      "cli",
      [](const std::vector<std::string>& args) {
        std::ostringstream out, err;
        int code = cli::run(args, out, err);
        return py::make_tuple(code, out.str(), err.str());
      },
      py::arg("args"), "Run a gtex subcommand; returns (exit_code, stdout, stderr).");
}
