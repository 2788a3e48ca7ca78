"""Compiled inner loops shared by the forward and backward passes."""
import numba as nb
import numpy as np

TILE = 16
DEGENERATE_EDGE = 1e-18
DEGENERATE_AREA = 1e-12


@nb.njit(cache=True)
def lb_clip(x0, y0, x1, y1, xmin, ymin, xmax, ymax):
    """Liang-Barsky parametric clip; returns (hit, t0, t1) along a->b."""
    dx = x1 - x0
    dy = y1 - y0
    if dx == 0.0 and dy == 0.0:
        return False, 0.0, 0.0
    t0 = 0.0
    t1 = 1.0
    for k in range(4):
        if k == 0:
            p = -dx
            q = x0 - xmin
        elif k == 1:
            p = dx
            q = xmax - x0
        elif k == 2:
            p = -dy
            q = y0 - ymin
        else:
            p = dy
            q = ymax - y0
        if p == 0.0:
            if q < 0.0:
                return False, 0.0, 0.0
        else:
            r = q / p
            if p < 0.0:
                if r > t1:
                    return False, 0.0, 0.0
                if r > t0:
                    t0 = r
            else:
                if r < t0:
                    return False, 0.0, 0.0
                if r < t1:
                    t1 = r
    if not t0 < t1:
        return False, 0.0, 0.0
    return True, t0, t1


@nb.njit(cache=True)
def clip_endpoints(x0, y0, x1, y1, xmin, ymin, xmax, ymax):
    hit, t0, t1 = lb_clip(x0, y0, x1, y1, xmin, ymin, xmax, ymax)
    if not hit:
        return False, 0.0, 0.0, 0.0, 0.0
    dx = x1 - x0
    dy = y1 - y0
    # untouched endpoints are passed through exactly
    if t0 == 0.0:
        ax, ay = x0, y0
    else:
        ax, ay = x0 + t0 * dx, y0 + t0 * dy
    if t1 == 1.0:
        bx, by = x1, y1
    else:
        bx, by = x0 + t1 * dx, y0 + t1 * dy
    ax = min(max(ax, xmin), xmax)
    bx = min(max(bx, xmin), xmax)
    ay = min(max(ay, ymin), ymax)
    by = min(max(by, ymin), ymax)
    if ax == bx and ay == by:
        return False, 0.0, 0.0, 0.0, 0.0
    return True, ax, ay, bx, by


@nb.njit(cache=True)
def edge_partials(x0, y0, x1, y1, xmin, ymin, xmax, ymax, p0, p1):
    """dI/d(x0, y0, x1, y1) of the box-filtered pixel for one directed edge.

    Foreground is assumed on the side where A x + B y + C < 0.
    """
    out = np.zeros(4)
    a = y1 - y0
    b = x0 - x1
    n2 = a * a + b * b
    if n2 <= DEGENERATE_EDGE:
        return out
    hit, cx0, cy0, cx1, cy1 = clip_endpoints(x0, y0, x1, y1, xmin, ymin, xmax, ymax)
    if not hit:
        return out
    c = x1 * y0 - x0 * y1
    k0 = -b * cx0 + a * cy0
    k1 = -b * cx1 + a * cy1
    dk = k1 - k0
    dk2 = (k1 * k1 - k0 * k0) / (2.0 * n2)
    scale = (p1 - p0) / ((xmax - xmin) * (ymax - ymin) * n2)
    bc = b * c / n2
    ac = a * c / n2
    out[0] = scale * ((y1 + bc) * dk - a * dk2)
    out[1] = -scale * ((x1 + ac) * dk + b * dk2)
    out[2] = scale * (-(y0 + bc) * dk + a * dk2)
    out[3] = scale * ((x0 + ac) * dk + b * dk2)
    return out


@nb.njit(cache=True)
def tri_contains(px, py, ax, ay, bx, by, cx, cy):
    """Closed point-in-triangle test, either winding; degenerate -> False."""
    e0 = (bx - ax) * (py - ay) - (by - ay) * (px - ax)
    e1 = (cx - bx) * (py - by) - (cy - by) * (px - bx)
    e2 = (ax - cx) * (py - cy) - (ay - cy) * (px - cx)
    area2 = (bx - ax) * (cy - ay) - (by - ay) * (cx - ax)
    if area2 > 0.0:
        return e0 >= 0.0 and e1 >= 0.0 and e2 >= 0.0
    if area2 < 0.0:
        return e0 <= 0.0 and e1 <= 0.0 and e2 <= 0.0
    return False


@nb.njit(cache=True)
def _face_pixel_span(verts, faces, f, H, W):
    """Inclusive pixel row/col range of a face bounding box, clamped."""
    a = faces[f, 0]
    b = faces[f, 1]
    c = faces[f, 2]
    xlo = min(verts[a, 0], verts[b, 0], verts[c, 0])
    xhi = max(verts[a, 0], verts[b, 0], verts[c, 0])
    ylo = min(verts[a, 1], verts[b, 1], verts[c, 1])
    yhi = max(verts[a, 1], verts[b, 1], verts[c, 1])
    j0 = max(int(np.floor(xlo)), 0)
    j1 = min(int(np.floor(xhi)), W - 1)
    i0 = max(int(np.floor(ylo)), 0)
    i1 = min(int(np.floor(yhi)), H - 1)
    return i0, i1, j0, j1


@nb.njit(cache=True)
def bin_faces(verts, faces, H, W, tile):
    """CSR lists of faces whose bounding box overlaps each tile."""
    ty = (H + tile - 1) // tile
    tx = (W + tile - 1) // tile
    counts = np.zeros(ty * tx + 1, dtype=np.int64)
    nf = faces.shape[0]
    spans = np.empty((nf, 4), dtype=np.int64)
    for f in range(nf):
        i0, i1, j0, j1 = _face_pixel_span(verts, faces, f, H, W)
        spans[f, 0] = i0
        spans[f, 1] = i1
        spans[f, 2] = j0
        spans[f, 3] = j1
        if i0 > i1 or j0 > j1:
            continue
        for r in range(i0 // tile, i1 // tile + 1):
            for q in range(j0 // tile, j1 // tile + 1):
                counts[r * tx + q + 1] += 1
    offsets = np.cumsum(counts)
    fill = offsets[:-1].copy()
    items = np.empty(offsets[-1], dtype=np.int64)
    for f in range(nf):
        i0, i1, j0, j1 = spans[f, 0], spans[f, 1], spans[f, 2], spans[f, 3]
        if i0 > i1 or j0 > j1:
            continue
        for r in range(i0 // tile, i1 // tile + 1):
            for q in range(j0 // tile, j1 // tile + 1):
                t = r * tx + q
                items[fill[t]] = f
                fill[t] += 1
    return offsets, items


@nb.njit(cache=True)
def _cover_region(verts, faces, face_ids, F, i0, i1, j0, j1, counts):
    """Count covered subsamples for pixels rows i0..i1-1, cols j0..j1-1."""
    hs = (i1 - i0) * F
    ws = (j1 - j0) * F
    hit = np.zeros((hs, ws), dtype=np.bool_)
    inv = 1.0 / F
    for n in range(face_ids.shape[0]):
        f = face_ids[n]
        a = faces[f, 0]
        b = faces[f, 1]
        c = faces[f, 2]
        ax, ay = verts[a, 0], verts[a, 1]
        bx, by = verts[b, 0], verts[b, 1]
        cx, cy = verts[c, 0], verts[c, 1]
        area2 = (bx - ax) * (cy - ay) - (by - ay) * (cx - ax)
        if area2 == 0.0:
            continue
        xlo = min(ax, bx, cx)
        xhi = max(ax, bx, cx)
        ylo = min(ay, by, cy)
        yhi = max(ay, by, cy)
        # subsample index range whose centers may fall inside the bbox
        s0 = max(int(np.floor((ylo - i0) * F - 0.5)), 0)
        s1 = min(int(np.ceil((yhi - i0) * F - 0.5)), hs - 1)
        r0 = max(int(np.floor((xlo - j0) * F - 0.5)), 0)
        r1 = min(int(np.ceil((xhi - j0) * F - 0.5)), ws - 1)
        for s in range(s0, s1 + 1):
            py = (i0 + s // F) + ((s % F) + 0.5) * inv
            for r in range(r0, r1 + 1):
                if hit[s, r]:
                    continue
                px = (j0 + r // F) + ((r % F) + 0.5) * inv
                if tri_contains(px, py, ax, ay, bx, by, cx, cy):
                    hit[s, r] = True
    for s in range(hs):
        for r in range(ws):
            if hit[s, r]:
                counts[i0 + s // F, j0 + r // F] += 1


@nb.njit(cache=True)
def coverage_counts(verts, faces, H, W, F, tiled):
    """Number of covered subsamples (0..F*F) per pixel."""
    counts = np.zeros((H, W), dtype=np.int64)
    nf = faces.shape[0]
    if nf == 0:
        return counts
    if not tiled:
        _cover_region(verts, faces, np.arange(nf), F, 0, H, 0, W, counts)
        return counts
    offsets, items = bin_faces(verts, faces, H, W, TILE)
    tx = (W + TILE - 1) // TILE
    ty = (H + TILE - 1) // TILE
    for r in range(ty):
        for q in range(tx):
            t = r * tx + q
            if offsets[t] == offsets[t + 1]:
                continue
            _cover_region(verts, faces, items[offsets[t]:offsets[t + 1]], F,
                          r * TILE, min((r + 1) * TILE, H), q * TILE, min((q + 1) * TILE, W), counts)
    return counts


@nb.njit(cache=True)
def _probe_covered(px, py, verts, faces, offsets, items, H, W, va, vb):
    """Is (px, py) inside some face that does not contain edge (va, vb)?"""
    tx = (W + TILE - 1) // TILE
    q = int(np.floor(px)) // TILE
    r = int(np.floor(py)) // TILE
    if px >= 0.0 and py >= 0.0 and q < tx and r * TILE < H:
        lo = offsets[r * tx + q]
        hi = offsets[r * tx + q + 1]
        for n in range(lo, hi):
            f = items[n]
            if _covers(px, py, verts, faces, f, va, vb):
                return True
        return False
    for f in range(faces.shape[0]):
        if _covers(px, py, verts, faces, f, va, vb):
            return True
    return False


@nb.njit(cache=True)
def _covers(px, py, verts, faces, f, va, vb):
    a = faces[f, 0]
    b = faces[f, 1]
    c = faces[f, 2]
    has_a = a == va or b == va or c == va
    has_b = a == vb or b == vb or c == vb
    if has_a and has_b:
        return False
    return tri_contains(px, py, verts[a, 0], verts[a, 1], verts[b, 0], verts[b, 1], verts[c, 0], verts[c, 1])


@nb.njit(cache=True)
def backward_kernel(verts, faces, edges, boundary, loss_grads, direction, p0, p1, probe_offset, occlusion):
    """Accumulate edge-pixel partials over boundary pixels.

    Returns (vertex gradients (N, 2), per-pixel directional derivative
    image, touched-pixel mask, number of edge-pixel evaluations).
    """
    H, W = boundary.shape
    nv = verts.shape[0]
    grad = np.zeros((nv, 2))
    dimage = np.zeros((H, W))
    touched = np.zeros((H, W), dtype=np.bool_)
    evaluations = 0
    offsets, items = bin_faces(verts, faces, H, W, TILE)
    for e in range(edges.shape[0]):
        va = edges[e, 0]
        vb = edges[e, 1]
        x0, y0 = verts[va, 0], verts[va, 1]
        x1, y1 = verts[vb, 0], verts[vb, 1]
        a = y1 - y0
        b = x0 - x1
        n2 = a * a + b * b
        if n2 <= DEGENERATE_EDGE:
            continue
        norm = np.sqrt(n2)
        # unit normal pointing to the background (A x + B y + C > 0) side
        nx = a / norm
        ny = b / norm
        j0 = max(int(np.floor(min(x0, x1))), 0)
        j1 = min(int(np.floor(max(x0, x1))), W - 1)
        i0 = max(int(np.floor(min(y0, y1))), 0)
        i1 = min(int(np.floor(max(y0, y1))), H - 1)
        for i in range(i0, i1 + 1):
            for j in range(j0, j1 + 1):
                if not boundary[i, j]:
                    continue
                hit, cx0, cy0, cx1, cy1 = clip_endpoints(x0, y0, x1, y1, j, i, j + 1.0, i + 1.0)
                if not hit:
                    continue
                touched[i, j] = True
                evaluations += 1
                if occlusion:
                    mx = 0.5 * (cx0 + cx1) + probe_offset * nx
                    my = 0.5 * (cy0 + cy1) + probe_offset * ny
                    if _probe_covered(mx, my, verts, faces, offsets, items, H, W, va, vb):
                        continue
                d = edge_partials(x0, y0, x1, y1, j, i, j + 1.0, i + 1.0, p0, p1)
                g = loss_grads[i, j]
                grad[va, 0] += g * d[0]
                grad[va, 1] += g * d[1]
                grad[vb, 0] += g * d[2]
                grad[vb, 1] += g * d[3]
                dimage[i, j] += (d[0] * direction[va, 0] + d[1] * direction[va, 1]
                                 + d[2] * direction[vb, 0] + d[3] * direction[vb, 1])
    return grad, dimage, touched, evaluations
