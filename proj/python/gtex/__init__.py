"""Gaussian textures bound to UV-mapped proxy meshes."""

from ._gtex import (
    Camera,
    GradCheckReport,
    Mesh,
    Texture,
    clamp_barycentric,
    cli,
    grad_check,
    iou,
    look_at,
    psnr,
    rebind,
    render,
    ssim,
)

__all__ = [
    "Camera",
    "GradCheckReport",
    "Mesh",
    "Texture",
    "clamp_barycentric",
    "cli",
    "grad_check",
    "iou",
    "look_at",
    "psnr",
    "rebind",
    "render",
    "ssim",
]
