"""Pure-Python reference implementation of the hot numeric kernels.

Scalar math only (no numpy in the inner loops); the compiled extension in
_fastkern.pyx mirrors this module function-for-function. Both backends must
agree to ~1e-12 on the same inputs; tests/test_kernels.py enforces parity.

Contact-model conventions (all in the hole frame):
  - z = 0 is the assembly face plane, +z points out of the hole mouth.
  - The hole cavity spans z in [-depth, 0].
  - Pin contour kinds: 0 = circle(r), 1 = rectangle(w, d), 2 = trapezoid
    (w1, w2, d). Hole contours are the pin contours dilated by `clearance`.
"""

import math

CONTOUR_CIRCLE = 0
CONTOUR_RECT = 1
CONTOUR_TRAPEZOID = 2

# Fraction of the normal force converted into a centering force while a pin
# rides on the chamfer ring around its hole.
_CHAMFER_GAIN = 0.45


def backend_name():
    return "reference"


# ---------------------------------------------------------------------------
# collision primitives
# ---------------------------------------------------------------------------

def obb_obb_overlap(ca, ha, ra, cb, hb, rb):
    """Separating-axis test for two oriented boxes.

    ca/cb: centers (3,), ha/hb: half extents (3,), ra/rb: rotations flattened
    row-major (9,). Exact touching counts as overlap (no separation margin).
    """
    # Rotation of b expressed in a's frame, plus translation in a's frame.
    r = [0.0] * 9
    absr = [0.0] * 9
    for i in range(3):
        for j in range(3):
            s = 0.0
            for k in range(3):
                s += ra[k * 3 + i] * rb[k * 3 + j]
            r[i * 3 + j] = s
            absr[i * 3 + j] = abs(s) + 1e-12
    td = [cb[0] - ca[0], cb[1] - ca[1], cb[2] - ca[2]]
    t = [0.0, 0.0, 0.0]
    for i in range(3):
        t[i] = td[0] * ra[0 * 3 + i] + td[1] * ra[1 * 3 + i] + td[2] * ra[2 * 3 + i]

    # a's face axes
    for i in range(3):
        rb_proj = hb[0] * absr[i * 3 + 0] + hb[1] * absr[i * 3 + 1] + hb[2] * absr[i * 3 + 2]
        if abs(t[i]) > ha[i] + rb_proj:
            return False
    # b's face axes
    for j in range(3):
        ra_proj = ha[0] * absr[0 * 3 + j] + ha[1] * absr[1 * 3 + j] + ha[2] * absr[2 * 3 + j]
        tb = abs(t[0] * r[0 * 3 + j] + t[1] * r[1 * 3 + j] + t[2] * r[2 * 3 + j])
        if tb > ra_proj + hb[j]:
            return False
    # edge-edge cross products
    for i in range(3):
        i1 = (i + 1) % 3
        i2 = (i + 2) % 3
        for j in range(3):
            j1 = (j + 1) % 3
            j2 = (j + 2) % 3
            ra_proj = ha[i1] * absr[i2 * 3 + j] + ha[i2] * absr[i1 * 3 + j]
            rb_proj = hb[j1] * absr[i * 3 + j2] + hb[j2] * absr[i * 3 + j1]
            ts = abs(t[i2] * r[i1 * 3 + j] - t[i1] * r[i2 * 3 + j])
            if ts > ra_proj + rb_proj:
                return False
    return True


def _point_aabb_dist2(px, py, pz, hx, hy, hz):
    dx = abs(px) - hx
    dy = abs(py) - hy
    dz = abs(pz) - hz
    d2 = 0.0
    if dx > 0.0:
        d2 += dx * dx
    if dy > 0.0:
        d2 += dy * dy
    if dz > 0.0:
        d2 += dz * dz
    return d2


def segment_obb_distance(p0, p1, c, h, r):
    """Distance from segment p0-p1 to an oriented box (0 when intersecting).

    The squared distance along the segment parameter is convex, so a fixed
    ternary search converges to machine precision.
    """
    a = [0.0, 0.0, 0.0]
    b = [0.0, 0.0, 0.0]
    for i in range(3):
        da = (p0[0] - c[0]) * r[0 * 3 + i] + (p0[1] - c[1]) * r[1 * 3 + i] + (p0[2] - c[2]) * r[2 * 3 + i]
        db = (p1[0] - c[0]) * r[0 * 3 + i] + (p1[1] - c[1]) * r[1 * 3 + i] + (p1[2] - c[2]) * r[2 * 3 + i]
        a[i] = da
        b[i] = db
    lo, hi = 0.0, 1.0
    for _ in range(100):
        m1 = lo + (hi - lo) / 3.0
        m2 = hi - (hi - lo) / 3.0
        f1 = _point_aabb_dist2(
            a[0] + (b[0] - a[0]) * m1, a[1] + (b[1] - a[1]) * m1, a[2] + (b[2] - a[2]) * m1,
            h[0], h[1], h[2])
        f2 = _point_aabb_dist2(
            a[0] + (b[0] - a[0]) * m2, a[1] + (b[1] - a[1]) * m2, a[2] + (b[2] - a[2]) * m2,
            h[0], h[1], h[2])
        if f1 <= f2:
            hi = m2
        else:
            lo = m1
    tm = 0.5 * (lo + hi)
    return math.sqrt(_point_aabb_dist2(
        a[0] + (b[0] - a[0]) * tm, a[1] + (b[1] - a[1]) * tm, a[2] + (b[2] - a[2]) * tm,
        h[0], h[1], h[2]))


def segment_segment_distance(p0, p1, q0, q1):
    """Closest distance between two 3-D segments (Ericson's clamping scheme)."""
    d1 = [p1[0] - p0[0], p1[1] - p0[1], p1[2] - p0[2]]
    d2 = [q1[0] - q0[0], q1[1] - q0[1], q1[2] - q0[2]]
    rr = [p0[0] - q0[0], p0[1] - q0[1], p0[2] - q0[2]]
    a = d1[0] * d1[0] + d1[1] * d1[1] + d1[2] * d1[2]
    e = d2[0] * d2[0] + d2[1] * d2[1] + d2[2] * d2[2]
    f = d2[0] * rr[0] + d2[1] * rr[1] + d2[2] * rr[2]
    if a <= 1e-18 and e <= 1e-18:
        return math.sqrt(rr[0] * rr[0] + rr[1] * rr[1] + rr[2] * rr[2])
    if a <= 1e-18:
        s = 0.0
        t = min(1.0, max(0.0, f / e))
    else:
        cc = d1[0] * rr[0] + d1[1] * rr[1] + d1[2] * rr[2]
        if e <= 1e-18:
            t = 0.0
            s = min(1.0, max(0.0, -cc / a))
        else:
            bb = d1[0] * d2[0] + d1[1] * d2[1] + d1[2] * d2[2]
            denom = a * e - bb * bb
            if denom > 1e-18:
                s = min(1.0, max(0.0, (bb * f - cc * e) / denom))
            else:
                s = 0.0
            t = bb * s + f
            if t < 0.0:
                t = 0.0
                s = min(1.0, max(0.0, -cc / a))
            elif t > e:
                t = 1.0
                s = min(1.0, max(0.0, (bb - cc) / a))
            else:
                t /= e
    cx = p0[0] + d1[0] * s - (q0[0] + d2[0] * t)
    cy = p0[1] + d1[1] * s - (q0[1] + d2[1] * t)
    cz = p0[2] + d1[2] * s - (q0[2] + d2[2] * t)
    return math.sqrt(cx * cx + cy * cy + cz * cz)


# ---------------------------------------------------------------------------
# quasi-static peg-in-hole contact
# ---------------------------------------------------------------------------

def _trapezoid_circumradius(w1, w2, d):
    h = 0.5 * d
    r1 = math.hypot(0.5 * w1, h)
    r2 = math.hypot(0.5 * w2, h)
    return r1 if r1 > r2 else r2


def resolve_contact(kinds, params, centers,
                    lat_x, lat_y, tip_z, prev_z, prev_in_hole,
                    tilt_x, tilt_y, spin,
                    mot_x, mot_y, mot_z,
                    lever_x, lever_y, lever_z,
                    clearance, depth, stiffness, mu, chamfer,
                    jam_tan, pen_cap):
    """Resolve one quasi-static contact step for a compound peg-hole pair.

    Returns (ax, ay, az, fx, fy, fz, tx, ty, tz, in_hole, on_floor,
    n_surface): the clamped lateral offset and tip height, the reaction
    wrench about the lever point, and contact flags.

    kinds/params/centers describe the pins: contour kind codes, per-kind
    parameters, and contour centers in the tip plane. The peg drops into the
    hole set only when every pin clears its own hole; otherwise any pin
    reaching the face plane rests on it. pen_cap bounds penetration (the
    force-balance depth of the position-held arm); prev_z/prev_in_hole carry
    the state needed for wedging and wall capture.
    """
    n = len(kinds)
    tilt = math.hypot(tilt_x, tilt_y)
    cos_s = math.cos(spin)
    sin_s = math.sin(spin)

    ax = lat_x
    ay = lat_y
    az = tip_z

    fx = fy = fz = 0.0
    tqx = tqy = tqz = 0.0

    # conservative free-space early out: every pin strictly above the plane
    max_center = 0.0
    for k in range(n):
        rc = math.hypot(centers[k][0], centers[k][1])
        if rc > max_center:
            max_center = rc
    if az - tilt * max_center > 0.0:
        return (ax, ay, az, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0, 0, 0)

    # per-pin placement at the commanded pose
    pin_off_x = [0.0] * n
    pin_off_y = [0.0] * n
    pin_z = [0.0] * n
    pin_fit = [0] * n
    for k in range(n):
        cxk = centers[k][0]
        cyk = centers[k][1]
        px = lat_x + (cxk * cos_s - cyk * sin_s) - cxk
        py = lat_y + (cxk * sin_s + cyk * cos_s) - cyk
        zk = tip_z + tilt_x * cyk - tilt_y * cxk
        pin_off_x[k] = px
        pin_off_y[k] = py
        pin_z[k] = zk

        # entry fit: the projection inflation is governed by the engagement
        # at the mouth (chamfer band), not the full commanded depth
        engage = -zk
        if engage < 0.0:
            engage = 0.0
        entry_cap = chamfer if chamfer > 0.0 else depth
        if engage > entry_cap:
            engage = entry_cap
        tilt_infl = engage * tilt  # small-angle tan
        kind = kinds[k]
        if kind == CONTOUR_RECT:
            w = params[k][0]
            d = params[k][1]
            infl_x = 0.5 * (w * (abs(cos_s) - 1.0) + d * abs(sin_s))
            infl_y = 0.5 * (d * (abs(cos_s) - 1.0) + w * abs(sin_s))
            if infl_x < 0.0:
                infl_x = 0.0
            if infl_y < 0.0:
                infl_y = 0.0
            fit = (abs(px) <= clearance - tilt_infl - infl_x and
                   abs(py) <= clearance - tilt_infl - infl_y)
        else:
            if kind == CONTOUR_TRAPEZOID:
                spin_infl = _trapezoid_circumradius(params[k][0], params[k][1], params[k][2]) * abs(sin_s)
            else:
                spin_infl = 0.0
            fit = math.hypot(px, py) <= clearance - tilt_infl - spin_infl
        pin_fit[k] = 1 if fit else 0

    all_fit = n > 0
    for k in range(n):
        if not pin_fit[k]:
            all_fit = False
            break

    in_hole = 1 if (tip_z < 0.0 and (all_fit or (prev_in_hole and prev_z < 0.0))) else 0
    on_floor = 0
    n_surface = 0

    if in_hole:
        # wedging blocks descent past the chamfer band but lets the tip enter
        jammed = tilt > jam_tan
        if jammed:
            block_z = prev_z if prev_z < -chamfer else -chamfer
            if az < block_z:
                az = block_z
        floor_z = -depth
        if az < floor_z - pen_cap:
            az = floor_z - pen_cap

        # lateral clamp: walls stop the worst-overlapping pin at pen_cap
        for _pass in range(2):
            worst = 0.0
            wdx = wdy = 0.0
            for k in range(n):
                px = pin_off_x[k]
                py = pin_off_y[k]
                if kinds[k] == CONTOUR_RECT:
                    ovx = abs(px) - clearance
                    ovy = abs(py) - clearance
                    if ovx > worst:
                        worst = ovx
                        wdx = -math.copysign(1.0, px)
                        wdy = 0.0
                    if ovy > worst:
                        worst = ovy
                        wdx = 0.0
                        wdy = -math.copysign(1.0, py)
                else:
                    rho = math.hypot(px, py)
                    ov = rho - clearance
                    if ov > worst and rho > 1e-15:
                        worst = ov
                        wdx = -px / rho
                        wdy = -py / rho
            if worst <= pen_cap or _pass == 1:
                break
            shift = worst - pen_cap
            ax += wdx * shift
            ay += wdy * shift
            for k in range(n):
                pin_off_x[k] += wdx * shift
                pin_off_y[k] += wdy * shift

        normal_sum = 0.0
        mid_z = 0.5 * az  # wall contact acts around mid-engagement
        for k in range(n):
            px = pin_off_x[k]
            py = pin_off_y[k]
            cxk = centers[k][0]
            cyk = centers[k][1]
            if kinds[k] == CONTOUR_RECT:
                ovx = abs(px) - clearance
                ovy = abs(py) - clearance
                if ovx > pen_cap:
                    ovx = pen_cap
                if ovy > pen_cap:
                    ovy = pen_cap
                wfx = -math.copysign(stiffness * ovx, px) if ovx > 0.0 else 0.0
                wfy = -math.copysign(stiffness * ovy, py) if ovy > 0.0 else 0.0
            else:
                rho = math.hypot(px, py)
                ov = rho - clearance
                if ov > pen_cap:
                    ov = pen_cap
                if ov > 0.0 and rho > 1e-15:
                    wfx = -stiffness * ov * px / rho
                    wfy = -stiffness * ov * py / rho
                else:
                    wfx = wfy = 0.0
            if wfx != 0.0 or wfy != 0.0:
                normal_sum += math.hypot(wfx, wfy)
                fx += wfx
                fy += wfy
                rx = cxk + px - lever_x
                ry = cyk + py - lever_y
                rz = mid_z - lever_z
                tqx += -rz * wfy
                tqy += rz * wfx
                tqz += rx * wfy - ry * wfx
        if jammed and az < 0.0:
            wedge = stiffness * (-az) * tilt
            fz += wedge
            rx = ax - lever_x
            ry = ay - lever_y
            tqx += ry * wedge
            tqy += -rx * wedge
        if az < floor_z:
            nf = stiffness * (floor_z - az)
            fz += nf
            on_floor = 1
            rx = ax - lever_x
            ry = ay - lever_y
            tqx += ry * nf
            tqy += -rx * nf
        # axial sliding friction from wall contact
        if normal_sum > 0.0 and abs(mot_z) > 1e-15:
            fz += -math.copysign(mu * normal_sum, mot_z)
    else:
        # face contact for every non-fitting pin at or below the plane
        worst_pen = 0.0
        for k in range(n):
            if not pin_fit[k] and -pin_z[k] > worst_pen:
                worst_pen = -pin_z[k]
        if n == 0 and az < 0.0:
            worst_pen = -az
        if worst_pen > pen_cap:
            rise = worst_pen - pen_cap
            az += rise
            for k in range(n):
                pin_z[k] += rise

        total_n = 0.0
        for k in range(n):
            if pin_fit[k]:
                continue
            zk = pin_z[k]
            if zk >= 0.0:
                continue
            nf = stiffness * (-zk)
            total_n += nf
            n_surface += 1
            px = pin_off_x[k]
            py = pin_off_y[k]
            cxk = centers[k][0]
            cyk = centers[k][1]
            gx = gy = 0.0
            rho = math.hypot(px, py)
            if chamfer > 0.0 and clearance < rho <= clearance + chamfer:
                gx = -_CHAMFER_GAIN * nf * px / rho
                gy = -_CHAMFER_GAIN * nf * py / rho
            fx += gx
            fy += gy
            fz += nf
            rx = cxk + px - lever_x
            ry = cyk + py - lever_y
            rz = -lever_z
            tqx += ry * nf - rz * gy
            tqy += rz * gx - rx * nf
            tqz += rx * gy - ry * gx
        if n == 0 and az < 0.0:
            # bare face plane (no holes): tip center takes the load
            nf = stiffness * (-az)
            total_n += nf
            n_surface = 1
            fz += nf
            rx = ax - lever_x
            ry = ay - lever_y
            tqx += ry * nf
            tqy += -rx * nf
        mt = math.hypot(mot_x, mot_y)
        if total_n > 0.0 and mt > 1e-15:
            fx += -mu * total_n * mot_x / mt
            fy += -mu * total_n * mot_y / mt

    return (ax, ay, az, fx, fy, fz, tqx, tqy, tqz, in_hole, on_floor, n_surface)
