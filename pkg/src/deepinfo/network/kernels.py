"""Hot loops for 3x3 convolutions (NHWC) and image augmentation."""
import numpy as np

from .._jit import njit, pick


def out_size(n, stride):
    return (n - 1) // stride + 1


def _im2col_numpy(x, stride):
    N, H, W, C = x.shape
    Ho, Wo = out_size(H, stride), out_size(W, stride)
    xp = np.pad(x, ((0, 0), (1, 1), (1, 1), (0, 0)))
    cols = np.empty((N, Ho, Wo, 3, 3, C))
    for di in range(3):
        for dj in range(3):
            cols[:, :, :, di, dj, :] = xp[:, di:di + stride * Ho:stride, dj:dj + stride * Wo:stride, :]
    return cols.reshape(N * Ho * Wo, 9 * C)


@njit
def _im2col_numba(x, stride):
    N, H, W, C = x.shape
    Ho = (H - 1) // stride + 1
    Wo = (W - 1) // stride + 1
    cols = np.zeros((N, Ho, Wo, 3, 3, C))
    for n in range(N):
        for i in range(Ho):
            for j in range(Wo):
                for di in range(3):
                    r = i * stride + di - 1
                    if r < 0 or r >= H:
                        continue
                    for dj in range(3):
                        c = j * stride + dj - 1
                        if c < 0 or c >= W:
                            continue
                        for ch in range(C):
                            cols[n, i, j, di, dj, ch] = x[n, r, c, ch]
    return cols.reshape(N * Ho * Wo, 9 * C)


def _col2im_numpy(dcols, N, H, W, C, stride):
    Ho, Wo = out_size(H, stride), out_size(W, stride)
    d = dcols.reshape(N, Ho, Wo, 3, 3, C)
    dxp = np.zeros((N, H + 2, W + 2, C))
    for di in range(3):
        for dj in range(3):
            dxp[:, di:di + stride * Ho:stride, dj:dj + stride * Wo:stride, :] += d[:, :, :, di, dj, :]
    return dxp[:, 1:H + 1, 1:W + 1, :]


@njit
def _col2im_numba(dcols, N, H, W, C, stride):
    Ho = (H - 1) // stride + 1
    Wo = (W - 1) // stride + 1
    d = dcols.reshape(N, Ho, Wo, 3, 3, C)
    dx = np.zeros((N, H, W, C))
    for n in range(N):
        for i in range(Ho):
            for j in range(Wo):
                for di in range(3):
                    r = i * stride + di - 1
                    if r < 0 or r >= H:
                        continue
                    for dj in range(3):
                        c = j * stride + dj - 1
                        if c < 0 or c >= W:
                            continue
                        for ch in range(C):
                            dx[n, r, c, ch] += d[n, i, j, di, dj, ch]
    return dx


def _warp_numpy(images, scale, tx, ty):
    m, H, W = images.shape
    xs = -1.0 + (2.0 * np.arange(W) + 1.0) / W
    ys = -1.0 + (2.0 * np.arange(H) + 1.0) / H
    # source position in pixel units
    sx = ((xs[None, None, :] - 2.0 * tx[:, None, None]) / scale[:, None, None] + 1.0) * W / 2.0 - 0.5
    sy = ((ys[None, :, None] - 2.0 * ty[:, None, None]) / scale[:, None, None] + 1.0) * H / 2.0 - 0.5
    sx = np.broadcast_to(sx, (m, H, W))
    sy = np.broadcast_to(sy, (m, H, W))
    x0 = np.floor(sx).astype(np.int64)
    y0 = np.floor(sy).astype(np.int64)
    fx = sx - x0
    fy = sy - y0
    b = np.arange(m)[:, None, None]
    out = np.zeros((m, H, W))
    for oy, wy in ((0, 1.0 - fy), (1, fy)):
        for ox, wx in ((0, 1.0 - fx), (1, fx)):
            yy = y0 + oy
            xx = x0 + ox
            valid = (yy >= 0) & (yy < H) & (xx >= 0) & (xx < W)
            vals = images[b, np.clip(yy, 0, H - 1), np.clip(xx, 0, W - 1)]
            out += np.where(valid, wy * wx * vals, 0.0)
    return out


@njit
def _warp_numba(images, scale, tx, ty):
    m, H, W = images.shape
    out = np.zeros((m, H, W))
    for k in range(m):
        for i in range(H):
            y = -1.0 + (2.0 * i + 1.0) / H
            sy = ((y - 2.0 * ty[k]) / scale[k] + 1.0) * H / 2.0 - 0.5
            y0 = int(np.floor(sy))
            fy = sy - y0
            for j in range(W):
                x = -1.0 + (2.0 * j + 1.0) / W
                sx = ((x - 2.0 * tx[k]) / scale[k] + 1.0) * W / 2.0 - 0.5
                x0 = int(np.floor(sx))
                fx = sx - x0
                acc = 0.0
                for oy in range(2):
                    yy = y0 + oy
                    if yy < 0 or yy >= H:
                        continue
                    wy = fy if oy == 1 else 1.0 - fy
                    for ox in range(2):
                        xx = x0 + ox
                        if xx < 0 or xx >= W:
                            continue
                        wx = fx if ox == 1 else 1.0 - fx
                        acc += wy * wx * images[k, yy, xx]
                out[k, i, j] = acc
    return out


im2col = pick(_im2col_numba, _im2col_numpy)
col2im = pick(_col2im_numba, _col2im_numpy)
_warp = pick(_warp_numba, _warp_numpy)


def warp_images(images, scale, tx, ty):
    """Zoom about the centre by ``scale`` then shift by ``(tx, ty)`` image fractions.

    Bilinear sampling, zero outside the source image; the same coordinate
    convention as the renderer, so warping a frontal render approximates
    rendering with those extrinsics.
    """
    images = np.ascontiguousarray(images, dtype=np.float64)
    m = images.shape[0]
    f = lambda v: np.ascontiguousarray(np.broadcast_to(np.asarray(v, dtype=np.float64), (m,)))
    return _warp(images, f(scale), f(tx), f(ty))
