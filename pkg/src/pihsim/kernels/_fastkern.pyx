# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernels; mirrors reference.py function-for-function."""

from libc.math cimport sqrt, fabs, hypot, cos, sin, copysign


def backend_name():
    return "cython"


cdef inline double _clamp01(double v) nogil:
    if v < 0.0:
        return 0.0
    if v > 1.0:
        return 1.0
    return v


def obb_obb_overlap(double[:] ca, double[:] ha, double[:] ra,
                    double[:] cb, double[:] hb, double[:] rb):
    cdef double r[9]
    cdef double absr[9]
    cdef double t[3]
    cdef double td[3]
    cdef double s, ra_proj, rb_proj, tb, ts
    cdef int i, j, k, i1, i2, j1, j2
    for i in range(3):
        for j in range(3):
            s = 0.0
            for k in range(3):
                s += ra[k * 3 + i] * rb[k * 3 + j]
            r[i * 3 + j] = s
            absr[i * 3 + j] = fabs(s) + 1e-12
    for i in range(3):
        td[i] = cb[i] - ca[i]
    for i in range(3):
        t[i] = td[0] * ra[0 * 3 + i] + td[1] * ra[1 * 3 + i] + td[2] * ra[2 * 3 + i]
    for i in range(3):
        rb_proj = hb[0] * absr[i * 3 + 0] + hb[1] * absr[i * 3 + 1] + hb[2] * absr[i * 3 + 2]
        if fabs(t[i]) > ha[i] + rb_proj:
            return False
    for j in range(3):
        ra_proj = ha[0] * absr[0 * 3 + j] + ha[1] * absr[1 * 3 + j] + ha[2] * absr[2 * 3 + j]
        tb = fabs(t[0] * r[0 * 3 + j] + t[1] * r[1 * 3 + j] + t[2] * r[2 * 3 + j])
        if tb > ra_proj + hb[j]:
            return False
    for i in range(3):
        i1 = (i + 1) % 3
        i2 = (i + 2) % 3
        for j in range(3):
            j1 = (j + 1) % 3
            j2 = (j + 2) % 3
            ra_proj = ha[i1] * absr[i2 * 3 + j] + ha[i2] * absr[i1 * 3 + j]
            rb_proj = hb[j1] * absr[i * 3 + j2] + hb[j2] * absr[i * 3 + j1]
            ts = fabs(t[i2] * r[i1 * 3 + j] - t[i1] * r[i2 * 3 + j])
            if ts > ra_proj + rb_proj:
                return False
    return True


cdef inline double _point_aabb_dist2(double px, double py, double pz,
                                     double hx, double hy, double hz) nogil:
    cdef double dx = fabs(px) - hx
    cdef double dy = fabs(py) - hy
    cdef double dz = fabs(pz) - hz
    cdef double d2 = 0.0
    if dx > 0.0:
        d2 += dx * dx
    if dy > 0.0:
        d2 += dy * dy
    if dz > 0.0:
        d2 += dz * dz
    return d2


def segment_obb_distance(double[:] p0, double[:] p1,
                         double[:] c, double[:] h, double[:] r):
    cdef double a[3]
    cdef double b[3]
    cdef int i, it
    cdef double lo = 0.0, hi = 1.0, m1, m2, f1, f2, tm
    for i in range(3):
        a[i] = (p0[0] - c[0]) * r[0 * 3 + i] + (p0[1] - c[1]) * r[1 * 3 + i] + (p0[2] - c[2]) * r[2 * 3 + i]
        b[i] = (p1[0] - c[0]) * r[0 * 3 + i] + (p1[1] - c[1]) * r[1 * 3 + i] + (p1[2] - c[2]) * r[2 * 3 + i]
    for it in range(100):
        m1 = lo + (hi - lo) / 3.0
        m2 = hi - (hi - lo) / 3.0
        f1 = _point_aabb_dist2(a[0] + (b[0] - a[0]) * m1, a[1] + (b[1] - a[1]) * m1,
                               a[2] + (b[2] - a[2]) * m1, h[0], h[1], h[2])
        f2 = _point_aabb_dist2(a[0] + (b[0] - a[0]) * m2, a[1] + (b[1] - a[1]) * m2,
                               a[2] + (b[2] - a[2]) * m2, h[0], h[1], h[2])
        if f1 <= f2:
            hi = m2
        else:
            lo = m1
    tm = 0.5 * (lo + hi)
    return sqrt(_point_aabb_dist2(a[0] + (b[0] - a[0]) * tm, a[1] + (b[1] - a[1]) * tm,
                                  a[2] + (b[2] - a[2]) * tm, h[0], h[1], h[2]))


def segment_segment_distance(double[:] p0, double[:] p1,
                             double[:] q0, double[:] q1):
    cdef double d1[3]
    cdef double d2[3]
    cdef double rr[3]
    cdef int i
    cdef double a, e, f, cc, bb, denom, s, t, cx, cy, cz
    for i in range(3):
        d1[i] = p1[i] - p0[i]
        d2[i] = q1[i] - q0[i]
        rr[i] = p0[i] - q0[i]
    a = d1[0] * d1[0] + d1[1] * d1[1] + d1[2] * d1[2]
    e = d2[0] * d2[0] + d2[1] * d2[1] + d2[2] * d2[2]
    f = d2[0] * rr[0] + d2[1] * rr[1] + d2[2] * rr[2]
    if a <= 1e-18 and e <= 1e-18:
        return sqrt(rr[0] * rr[0] + rr[1] * rr[1] + rr[2] * rr[2])
    if a <= 1e-18:
        s = 0.0
        t = _clamp01(f / e)
    else:
        cc = d1[0] * rr[0] + d1[1] * rr[1] + d1[2] * rr[2]
        if e <= 1e-18:
            t = 0.0
            s = _clamp01(-cc / a)
        else:
            bb = d1[0] * d2[0] + d1[1] * d2[1] + d1[2] * d2[2]
            denom = a * e - bb * bb
            if denom > 1e-18:
                s = _clamp01((bb * f - cc * e) / denom)
            else:
                s = 0.0
            t = bb * s + f
            if t < 0.0:
                t = 0.0
                s = _clamp01(-cc / a)
            elif t > e:
                t = 1.0
                s = _clamp01((bb - cc) / a)
            else:
                t /= e
    cx = p0[0] + d1[0] * s - (q0[0] + d2[0] * t)
    cy = p0[1] + d1[1] * s - (q0[1] + d2[1] * t)
    cz = p0[2] + d1[2] * s - (q0[2] + d2[2] * t)
    return sqrt(cx * cx + cy * cy + cz * cz)


cdef inline double _trap_circumradius(double w1, double w2, double d) nogil:
    cdef double h = 0.5 * d
    cdef double r1 = hypot(0.5 * w1, h)
    cdef double r2 = hypot(0.5 * w2, h)
    return r1 if r1 > r2 else r2


DEF CHAMFER_GAIN = 0.45
DEF MAX_PINS = 64


def resolve_contact(int[:] kinds, double[:, :] params, double[:, :] centers,
                    double lat_x, double lat_y, double tip_z, double prev_z,
                    bint prev_in_hole,
                    double tilt_x, double tilt_y, double spin,
                    double mot_x, double mot_y, double mot_z,
                    double lever_x, double lever_y, double lever_z,
                    double clearance, double depth, double stiffness,
                    double mu, double chamfer, double jam_tan, double pen_cap):
    cdef int n = kinds.shape[0]
    if n > MAX_PINS:
        raise ValueError("too many pins for compiled kernel")
    cdef double tilt = hypot(tilt_x, tilt_y)
    cdef double cos_s = cos(spin)
    cdef double sin_s = sin(spin)
    cdef double ax = lat_x, ay = lat_y, az = tip_z
    cdef double fx = 0.0, fy = 0.0, fz = 0.0
    cdef double tqx = 0.0, tqy = 0.0, tqz = 0.0

    cdef double pin_off_x[MAX_PINS]
    cdef double pin_off_y[MAX_PINS]
    cdef double pin_z[MAX_PINS]
    cdef int pin_fit[MAX_PINS]
    cdef int k, kind, _pass
    cdef double cxk, cyk, px, py, zk, engage, entry_cap, tilt_infl, w, d
    cdef double infl_x, infl_y, spin_infl, rho, ov, ovx, ovy
    cdef double worst, wdx, wdy, shift, normal_sum, mid_z, wfx, wfy
    cdef double rx, ry, rz, nf, gx, gy, mt, jam_wedge, floor_z
    cdef double max_center = 0.0, rc, worst_pen, rise, total_n, block_z
    cdef bint fit, all_fit, jammed
    cdef int in_hole, on_floor, n_surface

    for k in range(n):
        rc = hypot(centers[k, 0], centers[k, 1])
        if rc > max_center:
            max_center = rc
    if az - tilt * max_center > 0.0:
        return (ax, ay, az, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0, 0, 0)

    for k in range(n):
        cxk = centers[k, 0]
        cyk = centers[k, 1]
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
        tilt_infl = engage * tilt
        kind = kinds[k]
        if kind == 1:  # rectangle
            w = params[k, 0]
            d = params[k, 1]
            infl_x = 0.5 * (w * (fabs(cos_s) - 1.0) + d * fabs(sin_s))
            infl_y = 0.5 * (d * (fabs(cos_s) - 1.0) + w * fabs(sin_s))
            if infl_x < 0.0:
                infl_x = 0.0
            if infl_y < 0.0:
                infl_y = 0.0
            fit = (fabs(px) <= clearance - tilt_infl - infl_x and
                   fabs(py) <= clearance - tilt_infl - infl_y)
        else:
            if kind == 2:  # trapezoid
                spin_infl = _trap_circumradius(params[k, 0], params[k, 1], params[k, 2]) * fabs(sin_s)
            else:
                spin_infl = 0.0
            fit = hypot(px, py) <= clearance - tilt_infl - spin_infl
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

        for _pass in range(2):
            worst = 0.0
            wdx = 0.0
            wdy = 0.0
            for k in range(n):
                px = pin_off_x[k]
                py = pin_off_y[k]
                if kinds[k] == 1:
                    ovx = fabs(px) - clearance
                    ovy = fabs(py) - clearance
                    if ovx > worst:
                        worst = ovx
                        wdx = -copysign(1.0, px)
                        wdy = 0.0
                    if ovy > worst:
                        worst = ovy
                        wdx = 0.0
                        wdy = -copysign(1.0, py)
                else:
                    rho = hypot(px, py)
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
        mid_z = 0.5 * az
        for k in range(n):
            px = pin_off_x[k]
            py = pin_off_y[k]
            cxk = centers[k, 0]
            cyk = centers[k, 1]
            if kinds[k] == 1:
                ovx = fabs(px) - clearance
                ovy = fabs(py) - clearance
                if ovx > pen_cap:
                    ovx = pen_cap
                if ovy > pen_cap:
                    ovy = pen_cap
                wfx = -copysign(stiffness * ovx, px) if ovx > 0.0 else 0.0
                wfy = -copysign(stiffness * ovy, py) if ovy > 0.0 else 0.0
            else:
                rho = hypot(px, py)
                ov = rho - clearance
                if ov > pen_cap:
                    ov = pen_cap
                if ov > 0.0 and rho > 1e-15:
                    wfx = -stiffness * ov * px / rho
                    wfy = -stiffness * ov * py / rho
                else:
                    wfx = 0.0
                    wfy = 0.0
            if wfx != 0.0 or wfy != 0.0:
                normal_sum += hypot(wfx, wfy)
                fx += wfx
                fy += wfy
                rx = cxk + px - lever_x
                ry = cyk + py - lever_y
                rz = mid_z - lever_z
                tqx += -rz * wfy
                tqy += rz * wfx
                tqz += rx * wfy - ry * wfx
        if jammed and az < 0.0:
            jam_wedge = stiffness * (-az) * tilt
            fz += jam_wedge
            rx = ax - lever_x
            ry = ay - lever_y
            tqx += ry * jam_wedge
            tqy += -rx * jam_wedge
        if az < floor_z:
            nf = stiffness * (floor_z - az)
            fz += nf
            on_floor = 1
            rx = ax - lever_x
            ry = ay - lever_y
            tqx += ry * nf
            tqy += -rx * nf
        if normal_sum > 0.0 and fabs(mot_z) > 1e-15:
            fz += -copysign(mu * normal_sum, mot_z)
    else:
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
            cxk = centers[k, 0]
            cyk = centers[k, 1]
            gx = 0.0
            gy = 0.0
            rho = hypot(px, py)
            if chamfer > 0.0 and clearance < rho <= clearance + chamfer:
                gx = -CHAMFER_GAIN * nf * px / rho
                gy = -CHAMFER_GAIN * nf * py / rho
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
            nf = stiffness * (-az)
            total_n += nf
            n_surface = 1
            fz += nf
            rx = ax - lever_x
            ry = ay - lever_y
            tqx += ry * nf
            tqy += -rx * nf
        mt = hypot(mot_x, mot_y)
        if total_n > 0.0 and mt > 1e-15:
            fx += -mu * total_n * mot_x / mt
            fy += -mu * total_n * mot_y / mt

    return (ax, ay, az, fx, fy, fz, tqx, tqy, tqz, in_hole, on_floor, n_surface)
