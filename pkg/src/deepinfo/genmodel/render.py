"""Procedural face-like renderer.

Every output pixel is traced backwards to the template:

    image plane --(undo scale, translation)--> view plane
                --(undo viewpoint shear)-----> face plane
                --(undo bilinear shape warp)--> template plane

The template is analytic (an ellipse split into a 4 x 4 grid of texture
regions, darkened by smooth eye/nose/mouth blobs), so no resampling blur is
introduced and changing a coefficient only touches pixels that actually map
into its support. Illumination is a horizontal gain gradient in the view plane.
Coordinates are normalised to [-1, 1] with y pointing down.
"""
from dataclasses import dataclass, field

import numpy as np

from .._jit import njit, pick
from ..errors import InvalidSpecError
from .glm import SHAPE_DIMS, SHAPE_GRID, TEXTURE_DIMS
from .identity import Identity, NoiseSpec, inject_noise

VIEWPOINTS = (-30, -15, 0, 15, 30)
ILLUMINATIONS = VIEWPOINTS
SCALE_RANGE = (1.0, 2.0)
MAX_TRANSLATION = 0.3
IMAGE_SIZE = 32

FACE_RX, FACE_RY = 0.75, 0.9
BASE_INTENSITY = 0.5
LATTICE_STEP = 2.0 / (SHAPE_GRID - 1)
REGION_W = 2 * FACE_RX / 4
REGION_H = 2 * FACE_RY / 4
DEPTH = 0.5
ILLUM_GAIN = 0.6

# landmark blobs: (cx, cy, sx, sy, darkening)
LANDMARKS = np.array(
    [
        [-0.35, -0.25, 0.10, 0.08, 0.6],
        [0.35, -0.25, 0.10, 0.08, 0.6],
        [0.0, 0.10, 0.06, 0.15, 0.25],
        [0.0, 0.45, 0.22, 0.06, 0.5],
        [-0.35, -0.45, 0.14, 0.03, 0.3],
        [0.35, -0.45, 0.14, 0.03, 0.3],
    ]
)


def _render_numpy(shape, texture, view, illum, scale, tx, ty, H, W):
    m = shape.shape[0]
    xs = -1.0 + (2.0 * np.arange(W) + 1.0) / W
    ys = -1.0 + (2.0 * np.arange(H) + 1.0) / H
    x = xs[None, None, :]
    y = ys[None, :, None]
    sc = scale[:, None, None]
    xv = (x - 2.0 * tx[:, None, None]) / sc
    yv = (y - 2.0 * ty[:, None, None]) / sc
    gain = 1.0 + ILLUM_GAIN * np.sin(illum)[:, None, None] * xv
    th = view[:, None, None]
    z0 = DEPTH * np.maximum(1.0 - yv * yv, 0.0)
    xf = xv / np.cos(th) - np.sin(th) * z0
    yf = yv + 0.0 * xf

    # bilinear displacement from the control lattice
    disp = shape.reshape(m, SHAPE_GRID, SHAPE_GRID, 2)
    inside = (xf >= -1.0) & (xf <= 1.0) & (yf >= -1.0) & (yf <= 1.0)
    gx = np.clip((xf + 1.0) / LATTICE_STEP, 0.0, SHAPE_GRID - 1.0)
    gy = np.clip((yf + 1.0) / LATTICE_STEP, 0.0, SHAPE_GRID - 1.0)
    ix = np.minimum(np.floor(gx).astype(np.int64), SHAPE_GRID - 2)
    iy = np.minimum(np.floor(gy).astype(np.int64), SHAPE_GRID - 2)
    fx = gx - ix
    fy = gy - iy
    b = np.arange(m)[:, None, None]
    dx = np.zeros_like(xf)
    dy = np.zeros_like(xf)
    for oy, wy in ((0, 1.0 - fy), (1, fy)):
        for ox, wx in ((0, 1.0 - fx), (1, fx)):
            w = wy * wx
            d = disp[b, iy + oy, ix + ox]
            dx += w * d[..., 0]
            dy += w * d[..., 1]
    px = xf - np.where(inside, dx, 0.0)
    py = yf - np.where(inside, dy, 0.0)

    face = (px / FACE_RX) ** 2 + (py / FACE_RY) ** 2 <= 1.0
    col = np.clip(np.floor((px + FACE_RX) / REGION_W), 0, 3).astype(np.int64)
    row = np.clip(np.floor((py + FACE_RY) / REGION_H), 0, 3).astype(np.int64)
    t = texture[b, row * 4 + col]
    shade = np.ones_like(px)
    for cx, cy, sx, sy, a in LANDMARKS:
        shade -= a * np.exp(-0.5 * (((px - cx) / sx) ** 2 + ((py - cy) / sy) ** 2))
    val = np.where(face, (BASE_INTENSITY + t) * shade, 0.0) * gain
    return np.clip(val, 0.0, 1.0)


@njit
def _render_numba(shape, texture, view, illum, scale, tx, ty, H, W):
    m = shape.shape[0]
    out = np.empty((m, H, W))
    G = SHAPE_GRID
    nl = LANDMARKS.shape[0]
    for k in range(m):
        sth = np.sin(view[k])
        cth = np.cos(view[k])
        sil = np.sin(illum[k])
        for i in range(H):
            y = -1.0 + (2.0 * i + 1.0) / H
            yv = (y - 2.0 * ty[k]) / scale[k]
            z0 = DEPTH * max(1.0 - yv * yv, 0.0)
            for j in range(W):
                x = -1.0 + (2.0 * j + 1.0) / W
                xv = (x - 2.0 * tx[k]) / scale[k]
                gain = 1.0 + ILLUM_GAIN * sil * xv
                xf = xv / cth - sth * z0
                yf = yv
                px = xf
                py = yf
                if xf >= -1.0 and xf <= 1.0 and yf >= -1.0 and yf <= 1.0:
                    gx = min(max((xf + 1.0) / LATTICE_STEP, 0.0), G - 1.0)
                    gy = min(max((yf + 1.0) / LATTICE_STEP, 0.0), G - 1.0)
                    ix = min(int(np.floor(gx)), G - 2)
                    iy = min(int(np.floor(gy)), G - 2)
                    fx = gx - ix
                    fy = gy - iy
                    dxv = 0.0
                    dyv = 0.0
                    for oy in range(2):
                        wy = fy if oy == 1 else 1.0 - fy
                        for ox in range(2):
                            wx = fx if ox == 1 else 1.0 - fx
                            base = ((iy + oy) * G + (ix + ox)) * 2
                            dxv += wy * wx * shape[k, base]
                            dyv += wy * wx * shape[k, base + 1]
                    px = xf - dxv
                    py = yf - dyv
                val = 0.0
                if (px / FACE_RX) ** 2 + (py / FACE_RY) ** 2 <= 1.0:
                    col = min(max(int(np.floor((px + FACE_RX) / REGION_W)), 0), 3)
                    row = min(max(int(np.floor((py + FACE_RY) / REGION_H)), 0), 3)
                    shade = 1.0
                    for q in range(nl):
                        ex = (px - LANDMARKS[q, 0]) / LANDMARKS[q, 2]
                        ey = (py - LANDMARKS[q, 1]) / LANDMARKS[q, 3]
                        shade -= LANDMARKS[q, 4] * np.exp(-0.5 * (ex * ex + ey * ey))
                    val = (BASE_INTENSITY + texture[k, row * 4 + col]) * shade
                val *= gain
                out[k, i, j] = min(max(val, 0.0), 1.0)
    return out


_render = pick(_render_numba, _render_numpy)


def render_coefficients(shape, texture, viewpoint=0.0, illumination=0.0, scale=1.0,
                        translation=(0.0, 0.0), size=IMAGE_SIZE, chunk=2048):
    """Render a batch of raw coefficient vectors.

    Parameters
    ----------
    shape : (m, 72) control-point displacements ``(dx, dy)`` in row-major order
    texture : (m, 16) region intensity offsets
    viewpoint, illumination : degrees, scalar or (m,)
    scale : scalar or (m,)
    translation : (2,) or (m, 2) fractions of the image width/height

    Returns
    -------
    (m, size, size) array in [0, 1]
    """
    shape = np.atleast_2d(np.asarray(shape, dtype=np.float64))
    texture = np.atleast_2d(np.asarray(texture, dtype=np.float64))
    m = shape.shape[0]
    if shape.shape != (m, SHAPE_DIMS) or texture.shape != (m, TEXTURE_DIMS):
        raise InvalidSpecError("coefficient arrays have the wrong shape",
                               shape=list(shape.shape), texture=list(texture.shape))
    view = np.deg2rad(np.broadcast_to(np.asarray(viewpoint, dtype=np.float64), (m,)))
    illum = np.deg2rad(np.broadcast_to(np.asarray(illumination, dtype=np.float64), (m,)))
    sc = np.broadcast_to(np.asarray(scale, dtype=np.float64), (m,))
    tr = np.broadcast_to(np.asarray(translation, dtype=np.float64), (m, 2))
    out = np.empty((m, size, size))
    for a in range(0, m, chunk):
        sl = slice(a, min(a + chunk, m))
        out[sl] = _render(
            np.ascontiguousarray(shape[sl]), np.ascontiguousarray(texture[sl]),
            np.ascontiguousarray(view[sl]), np.ascontiguousarray(illum[sl]),
            np.ascontiguousarray(sc[sl]), np.ascontiguousarray(tr[sl, 0]),
            np.ascontiguousarray(tr[sl, 1]), size, size,
        )
    return out


@dataclass(frozen=True)
class StimulusSpec:
    identity: Identity
    viewpoint: float = 0
    illumination: float = 0
    scale: float = 1.0
    translation: tuple = (0.0, 0.0)
    noise: NoiseSpec = None

    def validate(self):
        if self.viewpoint not in VIEWPOINTS:
            raise InvalidSpecError(f"viewpoint {self.viewpoint} not in {VIEWPOINTS}")
        if self.illumination not in ILLUMINATIONS:
            raise InvalidSpecError(f"illumination {self.illumination} not in {ILLUMINATIONS}")
        if not SCALE_RANGE[0] <= self.scale <= SCALE_RANGE[1]:
            raise InvalidSpecError(f"scale {self.scale} outside {SCALE_RANGE}")
        if len(self.translation) != 2 or any(abs(t) > MAX_TRANSLATION for t in self.translation):
            raise InvalidSpecError(f"translation {self.translation} exceeds {MAX_TRANSLATION}")


@dataclass
class RenderedStimulus:
    pixels: np.ndarray  # (H, W)
    feature_coords: np.ndarray  # (H*W, 2) row, col of each pixel feature
    spec: StimulusSpec = field(repr=False)


def pixel_coords(size=IMAGE_SIZE):
    r, c = np.divmod(np.arange(size * size), size)
    return np.stack([r, c], axis=1)


def render_stimulus(spec, model, population_std=None, size=IMAGE_SIZE):
    """Render one stimulus; noise (if any) is injected before rendering.

    ``population_std`` defaults to the model's residual standard deviations,
    i.e. the spread of identities sampled with ``residual_sigma=1``.
    """
    spec.validate()
    identity = spec.identity
    if spec.noise is not None:
        if population_std is None:
            population_std = {ch: model[ch].residual_std for ch in ("shape", "texture")}
        identity = inject_noise(identity, spec.noise, population_std)
    coeffs = identity.coefficients(model)
    pixels = render_coefficients(
        coeffs["shape"][None], coeffs["texture"][None], spec.viewpoint, spec.illumination,
        spec.scale, spec.translation, size,
    )[0]
    return RenderedStimulus(pixels, pixel_coords(size), spec)


def region_of_template_point(px, py):
    """Texture region index for template-plane coordinates (-1 if off-face)."""
    if (px / FACE_RX) ** 2 + (py / FACE_RY) ** 2 > 1.0:
        return -1
    col = min(max(int(np.floor((px + FACE_RX) / REGION_W)), 0), 3)
    row = min(max(int(np.floor((py + FACE_RY) / REGION_H)), 0), 3)
    return row * 4 + col


def control_point_position(index):
    """Template-plane (x, y) of shape control point ``index`` (0..35)."""
    row, col = divmod(index, SHAPE_GRID)
    return -1.0 + col * LATTICE_STEP, -1.0 + row * LATTICE_STEP

