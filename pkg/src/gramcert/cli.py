"""Command-line surface.

Subcommands cover every bound and certification procedure; inputs are NPY
tensors (matrices 2-D, filters 4-D, score samples 2-D) or CSV score
tables with one header row; outputs are JSON on stdout (CSV for
``repro``).  Exit codes: 0 success, 2 input/parse error, 3 numeric or
hypothesis error.  All randomness flows through ``--seed`` (default 0),
and reruns with identical flags are byte-identical; ``--timing`` adds a
wall-clock field and is therefore off by default.
"""

import argparse
import json
import sys
import time

import numpy as np

from . import certify as ct
from . import convnorm, densenorm, io, oracle, rescale, repro, smoothbounds
from .errors import GramcertError, InputError, NumericError


def _emit(payload, out_path):
    text = json.dumps(payload, indent=2) + "\n"
    if out_path:
        with open(out_path, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _bound_payload(b, extra=None, wall_ms=None):
    payload = {"value": b.value, "direction": b.direction,
               "iterations": b.iterations}
    if extra:
        payload.update(extra)
    if wall_ms is not None:
        payload["wall_time_ms"] = wall_ms
    return payload


def _cmd_specnorm_dense(args):
    W = io.load_matrix(args.file)
    t0 = time.perf_counter()
    if args.method == "gi":
        b = densenorm.gram_iteration(W, args.iters)
    elif args.method == "pi":
        b = densenorm.power_iteration(W, args.iters, seed=args.seed)
    else:
        val = oracle.exact_svd_sigma1(W)
        b = densenorm.SpectralBound(val, 0, "exact")
    wall = (time.perf_counter() - t0) * 1000.0 if args.timing else None
    _emit(_bound_payload(b, wall_ms=wall), args.out)


def _cmd_specnorm_conv(args):
    K = io.load_filter(args.file)
    if args.stride is not None:
        rep = convnorm.strided_bound(K, args.n, args.stride, args.iters)
    elif args.approx == "circ2zero":
        rep = convnorm.circ_to_zero_bound(K, args.n, args.iters)
    elif args.approx == "reduced":
        if args.n0 is None:
            raise InputError("--approx reduced requires --n0")
        rep = convnorm.reduced_input_bound(K, args.n, args.n0, args.iters)
    elif args.padding == "circ":
        rep = convnorm.norm2_circ(K, args.n, args.iters)
    else:
        rep = convnorm.norm2_toep(K, args.iters, readout=args.readout)
    extra = {"method": rep.method, "n": rep.n, "n0": rep.n0, "t": rep.t,
             "alpha": rep.alpha, "factor": rep.factor}
    _emit(_bound_payload(rep.bound, extra), args.out)


def _cmd_rescale(args):
    arr = io._load_array(args.file)
    if arr.ndim == 2:
        q = io.load_vector(args.q) if args.q else None
        R = rescale.spectral_rescaling(arr, t=args.t, q=q)
        sigma1 = oracle.exact_svd_sigma1(arr * R[None, :])
    elif arr.ndim == 4:
        if args.q:
            raise InputError("--q applies to matrices only")
        R = rescale.conv_spectral_rescaling(arr, max(1, args.t))
        rescaled = arr * R[None, :, None, None]
        # deep readout: the same-depth bound of the rescaled filter is
        # looser than 1 even though the operator itself is contractive
        depth = min(8, max(args.t, 6))
        sigma1 = convnorm.norm2_toep(rescaled, depth).bound.value
    else:
        raise InputError("rescale expects a 2-D matrix or 4-D filter")
    _emit({"R": [float(v) for v in R], "sigma1_after": float(sigma1),
           "t": args.t}, args.out)


def _cmd_pub(args):
    layers = io.load_manifest(args.manifest)
    report = rescale.pub(layers, n=args.n, t=args.t,
                         conv_padding=args.conv_padding)
    _emit({"total": report.total,
           "per_layer": [{"index": idx, "value": b.value,
                          "direction": b.direction}
                         for idx, b in report.per_layer]}, args.out)


def _parse_temps(spec):
    try:
        lo, hi, count = spec.split(":")
        return ct.default_temperature_grid(float(lo), float(hi), int(count))
    except ValueError as exc:
        raise InputError(f"--temps expects lo:hi:count, got {spec!r}") from exc


def _result_payload(res):
    return {"predicted": res.predicted, "radius": res.radius,
            "alpha": res.alpha, "radius_kind": res.radius_kind,
            "meta": res.meta}


def _cmd_certify(args):
    files = args.files
    ci_name = {"cp": ct.CLOPPER_PEARSON, "hoeffding": ct.HOEFFDING,
               "bernstein": ct.BERNSTEIN}[args.ci]
    if args.procedure == "mono":
        scores = io.load_scores(files[0])
        hard = ct.simplex_map(scores, ct.SimplexMap(ct.HARDMAX))
        counts = hard.sum(axis=0).astype(int)
        i1 = int(np.argmax(counts))
        lo = ct.ci_clopper_pearson(int(counts[i1]), hard.shape[0], args.alpha,
                                   ct.LOWER).lower
        res = ct.CertificationResult(
            predicted=i1, radius=ct.radius_mono(lo, args.sigma),
            alpha=args.alpha, radius_kind="mono", meta={"p_lower": lo})
    elif args.procedure == "bonferroni":
        scores = io.load_scores(files[0])
        res = ct.certify_bonferroni(scores, args.sigma, args.alpha,
                                    method=ci_name, range_r=args.r)
    elif args.procedure == "cpm":
        if len(files) < 2:
            raise InputError("cpm needs a selection file and an estimation file")
        sel = io.load_scores(files[0])
        hard_sel = ct.simplex_map(sel, ct.SimplexMap(ct.HARDMAX))
        counts0 = hard_sel.sum(axis=0).astype(int)
        est = ct.simplex_map(io.load_scores(files[1]), ct.SimplexMap(ct.HARDMAX))
        res = ct.certify_cpm(counts0, est, args.sigma, args.alpha)
    else:  # lvmrs
        if len(files) < 2:
            raise InputError("lvmrs needs a selection file and an estimation file")
        sel = io.load_scores(files[0])
        est = io.load_scores(files[1])
        kinds = tuple(args.maps.split(","))
        res = ct.lvm_rs(sel, est, args.sigma, args.alpha,
                        temp_grid=_parse_temps(args.temps),
                        map_kinds=kinds, mass=args.r)
    _emit(_result_payload(res), args.out)


def _cmd_smoothbound(args):
    kind = args.bound
    if kind == "bounded":
        payload = {"bound": smoothbounds.lip_bound_bounded(args.sigma)}
    elif kind == "refined":
        payload = {"bound": smoothbounds.lip_bound_bounded_refined(args.sigma, args.r)}
    elif kind == "erf":
        ctx = smoothbounds.SmoothingContext(L=args.L, sigma=args.sigma, r=args.r)
        payload = {"bound": smoothbounds.lip_bound_weierstrass(ctx)}
    elif kind == "optimal-sigma":
        sigma_star, bound, gain = smoothbounds.optimal_sigma(args.L, args.r)
        payload = {"sigma_star": sigma_star, "bound": bound, "gain": gain}
    elif kind == "local-quantile":
        payload = {"bound": smoothbounds.local_lip_quantile(args.p, args.L,
                                                            args.sigma)}
    elif kind == "curvature":
        payload = {"bound": smoothbounds.smoothed_curvature_bound(
            args.H, args.eps, args.sigma)}
    else:  # ce
        logits = [float(v) for v in args.logits.split(",")]
        payload = {"bound": smoothbounds.smoothed_ce_bound(
            logits, args.label, args.h_norm_sq, args.sigma)}
    _emit(payload, args.out)


def _cmd_repro(args):
    sys.stdout.write(repro.figure_table(args.figure, seed=args.seed))


def build_parser():
    p = argparse.ArgumentParser(
        prog="gramcert",
        description="Certified spectral-norm bounds and smoothing certificates")
    sub = p.add_subparsers(dest="command", required=True)

    sd = sub.add_parser("specnorm-dense", help="spectral norm of a matrix file")
    sd.add_argument("file")
    sd.add_argument("--method", choices=("pi", "gi", "svd"), default="gi")
    sd.add_argument("--iters", type=int, default=8)
    sd.add_argument("--seed", type=int, default=0)
    sd.add_argument("--timing", action="store_true",
                    help="add wall_time_ms (breaks byte-identical reruns)")
    sd.add_argument("--out")
    sd.set_defaults(func=_cmd_specnorm_dense)

    sc = sub.add_parser("specnorm-conv", help="spectral bound of a conv filter")
    sc.add_argument("file")
    sc.add_argument("--padding", choices=("circ", "zero"), default="zero")
    sc.add_argument("--n", type=int, default=16)
    sc.add_argument("--iters", type=int, default=5)
    sc.add_argument("--approx", choices=("circ2zero", "reduced"))
    sc.add_argument("--n0", type=int)
    sc.add_argument("--stride", type=int)
    sc.add_argument("--readout", choices=("inf", "fro"), default="inf")
    sc.add_argument("--out")
    sc.set_defaults(func=_cmd_specnorm_conv)

    rs = sub.add_parser("rescale", help="1-Lipschitz diagonal rescaling")
    rs.add_argument("file")
    rs.add_argument("--t", type=int, default=1)
    rs.add_argument("--q", help="optional NPY/CSV vector of positive weights")
    rs.add_argument("--out")
    rs.set_defaults(func=_cmd_rescale)

    pb = sub.add_parser("pub", help="product upper bound over a layer manifest")
    pb.add_argument("manifest")
    pb.add_argument("--n", type=int, default=8)
    pb.add_argument("--t", type=int, default=4)
    pb.add_argument("--conv-padding", choices=("zero", "circ"), default="zero")
    pb.add_argument("--out")
    pb.set_defaults(func=_cmd_pub)

    ce = sub.add_parser("certify", help="randomized-smoothing certification")
    ce.add_argument("files", nargs="+")
    ce.add_argument("--procedure", choices=("bonferroni", "cpm", "lvmrs", "mono"),
                    default="bonferroni")
    ce.add_argument("--sigma", type=float, default=0.5)
    ce.add_argument("--alpha", type=float, default=1e-3)
    ce.add_argument("--ci", choices=("cp", "hoeffding", "bernstein"), default="cp")
    ce.add_argument("--r", type=float, default=1.0)
    ce.add_argument("--temps", default="0.01:50:50")
    ce.add_argument("--maps", default="sparsemax,softmax,hardmax")
    ce.add_argument("--seed", type=int, default=0)
    ce.add_argument("--out")
    ce.set_defaults(func=_cmd_certify)

    sm = sub.add_parser("smoothbound", help="closed-form smoothing bounds")
    sm.add_argument("--bound", required=True,
                    choices=("bounded", "refined", "erf", "optimal-sigma",
                             "local-quantile", "curvature", "ce"))
    sm.add_argument("--L", type=float, default=1.0)
    sm.add_argument("--sigma", type=float, default=1.0)
    sm.add_argument("--r", type=float, default=1.0)
    sm.add_argument("--p", type=float, default=0.9)
    sm.add_argument("--H", type=float, default=1.0)
    sm.add_argument("--eps", type=float, default=0.0)
    sm.add_argument("--logits", default="0.0,0.0")
    sm.add_argument("--label", type=int, default=0)
    sm.add_argument("--h-norm-sq", type=float, default=0.0)
    sm.add_argument("--out")
    sm.set_defaults(func=_cmd_smoothbound)

    rp = sub.add_parser("repro", help="regenerate a desk-scale study as CSV")
    rp.add_argument("--figure", required=True, choices=repro.FIGURES)
    rp.add_argument("--seed", type=int, default=0)
    rp.set_defaults(func=_cmd_repro)
    return p


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        args.func(args)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except NumericError as exc:
        print(f"numeric error: {exc}", file=sys.stderr)
        return 3
    except GramcertError as exc:  # pragma: no cover - residual guard
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
