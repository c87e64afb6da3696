"""Command-line front end: ``deltashell <subcommand> [--config F] [--set k=v] [--out D] [--check]``.

Every subcommand writes ``<subcommand>.json`` (``converge`` also writes
``converge.csv``) into the output directory.  With ``--check`` the module's
invariant suite runs as well; the exit status is nonzero when any check
fails.
"""

import argparse
import os
import sys

import numpy as np

from .dirac import alpha_dot, dirac_rep
from .harness import KINDS, dumps_json, emit, format_csv, load_config, output_dir, rate_fit, run_converge

CLOSED_KINDS = ("bie-solve", "eigs", "norms")


def _normal(theta):
    return np.eye(theta)[theta - 1]


def _check(name, passed, value=None):
    return {"name": name, "passed": bool(passed), "value": value}


def _random_hermitian(rng, N, scale):
    X = rng.normal(size=(N, N)) + 1j * rng.normal(size=(N, N))
    H = X + X.conj().T
    return scale * H / np.linalg.norm(H, 2)


# ---------------------------------------------------------------------------
# subcommands: each returns (result dict, list of checks)
# ---------------------------------------------------------------------------
def cmd_renormalize(cfg, check):
    from .matfun import (ArctanDomainError, CoefficientField, closed_form_scaling, family_matrix,
                         inverse_renormalize, renormalize, scaling_matrix)

    rep = dirac_rep(cfg.theta)
    nu = _normal(cfg.theta)
    V = cfg.potential(nu)
    sr = scaling_matrix(V, nu, rep)
    Vt = V @ sr.S
    back = inverse_renormalize(CoefficientField.constant_field(Vt, rep), nu).values[0]
    res = {"V": V, "S": sr.S, "Vt": Vt, "cos_cond": sr.cos_cond,
           "round_trip_error": float(np.max(np.abs(back - V)))}
    if cfg.V is None:
        res["closed_form_scaling"] = closed_form_scaling(cfg.eta, cfg.tau, cfg.lam)
    checks = []
    if check:
        rng = np.random.default_rng(cfg.seed)
        rt, herm, fam = 0.0, 0.0, 0.0
        for _ in range(cfg.samples):
            Vr = _random_hermitian(rng, rep.n, rng.uniform(0.05, 0.95))
            f = renormalize(CoefficientField.constant_field(Vr, rep), nu)
            herm = max(herm, f.hermitian_defect())
            g = renormalize(inverse_renormalize(f, nu), nu)
            rt = max(rt, float(np.max(np.abs(g.values - f.values))))
            eta, tau, lam = rng.uniform(-1.4, 1.4, size=3)
            Sf = scaling_matrix(family_matrix(eta, tau, lam, nu, rep), nu, rep).S
            fam = max(fam, float(np.max(np.abs(Sf - closed_form_scaling(eta, tau, lam) * rep.identity))))
        checks += [_check("round_trip", rt < 1e-10, rt), _check("hermitian", herm < 1e-12, herm),
                   _check("closed_form", fam < 1e-10, fam)]
        raised = True
        for sgn in (1, -1):
            try:
                inverse_renormalize(CoefficientField.constant_field(2 * sgn * rep.identity, rep), nu)
                raised = False
            except ArctanDomainError:
                pass
        checks.append(_check("critical_strength_guard", raised))
    return res, checks


def cmd_kernel_eval(cfg, check):
    from .kernels import KernelParams, dirac_apply_fd, green_kernel

    params = KernelParams(cfg.z, cfg.m, cfg.theta)
    pts = np.asarray(cfg.points, dtype=float).reshape(-1, cfg.theta)
    res = {"points": pts, "G": green_kernel(params, pts)}
    checks = []
    if check:
        rng = np.random.default_rng(cfg.seed)
        x0 = pts[0]
        f = lambda x: green_kernel(params, x)  # noqa: E731
        r = [float(np.max(np.abs(dirac_apply_fd(params, f, x0, h)))) for h in (1e-2, 5e-3, 2.5e-3)]
        order = float(np.polyfit(np.log([1e-2, 5e-3, 2.5e-3]), np.log(r), 1)[0])
        x = rng.normal(size=(cfg.samples, cfg.theta))
        sym = float(np.max(np.abs(np.conj(np.swapaxes(green_kernel(params, x), -1, -2))
                                  - green_kernel(params.conj(), -x))))
        checks += [_check("fd_order", order >= 1.8, order), _check("adjoint_reflection", sym < 1e-12, sym)]
    return res, checks


def cmd_bie_solve(cfg, check):
    from .bie import ShellSystem, assemble_cauchy, one_sided_cauchy, smallest_singular_value, solve_shell
    from .kernels import KernelParams

    curve = cfg.build_curve()
    rep = dirac_rep(2)
    params = KernelParams(cfg.z, cfg.m)
    system = ShellSystem(curve, params, cfg.n, rep)
    nu = system.geometry.nu
    Vt = np.stack([cfg.potential(v) for v in nu])
    rng = np.random.default_rng(cfg.seed)
    phi = rng.normal(size=(cfg.n, rep.n)) + 1j * rng.normal(size=(cfg.n, rep.n))
    psi = solve_shell(system, Vt, phi)
    A = system.system_matrix(Vt)
    res = {"n": cfg.n, "residual": float(np.linalg.norm(A @ psi.ravel() - phi.ravel()) / np.linalg.norm(phi)),
           "sigma_min": smallest_singular_value(A), "density_norm": float(np.linalg.norm(psi))}
    checks = []
    if check:
        zero = solve_shell(system, np.zeros_like(Vt), phi)
        checks.append(_check("free_identity", np.allclose(zero, phi, atol=1e-14), float(np.max(np.abs(zero - phi)))))
        small = 1e-4 * Vt
        psi_s = solve_shell(system, small, phi)
        C = system.C_matrix
        two = phi.ravel() - C @ np.einsum("iab,ib->ia", small, phi).ravel()
        neu = float(np.linalg.norm(psi_s.ravel() - two) / np.linalg.norm(phi))
        checks.append(_check("neumann_two_term", neu < 1e-6, neu))
        n_pl = 128
        layer = ShellSystem(curve, params, n_pl, rep).layer
        s = layer.geometry.s
        dens = np.stack([np.exp(2j * s) + 0.5 * np.cos(3 * s), 0.3 * np.sin(s) + 1j * np.cos(5 * s)], axis=1)
        Cp = one_sided_cauchy(layer, dens, "+")
        Cm = one_sided_cauchy(layer, dens, "-")
        Cn = (assemble_cauchy(curve, params, n_pl, rep) @ dens.ravel()).reshape(dens.shape)
        gap = float(np.max(np.abs(Cp - Cm)))
        nys = float(max(np.max(np.abs(Cp - Cn)), np.max(np.abs(Cm - Cn))))
        checks += [_check("plemelj_two_sided", gap < 1e-6, gap), _check("plemelj_vs_nystrom", nys < 1e-6, nys)]
    return res, checks


def cmd_eigs(cfg, check):
    from .bie import eigenvalue_search

    curve = cfg.build_curve()
    if not curve.closed:
        raise ValueError("eigs needs a closed curve")
    rep = dirac_rep(2)
    from .geometry import normal

    nu = normal(curve, np.linspace(0, 2 * np.pi, cfg.n, endpoint=False))
    Vt = np.stack([cfg.potential(v) for v in nu])
    if np.allclose(Vt, Vt[0]):
        Vt = Vt[0]
    eig = eigenvalue_search(curve, cfg.m, Vt, n=cfg.n, n_scan=min(cfg.n_scan, cfg.n), tol=cfg.tol, rep=rep)
    res = {"eigenvalues": eig, "n": cfg.n}
    electrostatic = cfg.V is None and cfg.tau == 0 and cfg.lam == 0 and curve.family == "circle"
    if electrostatic:
        from .modes import circle_eigenvalues, distinct

        oracle = distinct([r for r, _ in circle_eigenvalues(cfg.eta, cfg.m, curve.params[0])])
        oracle = [z for z in oracle if -abs(cfg.m) + 1e-3 < z < abs(cfg.m) - 1e-3]
        res["mode_matching"] = oracle
    checks = []
    if check:
        checks.append(_check("real_eigenvalues", all(np.isreal(e) for e in eig)))
        checks.append(_check("free_operator_no_eigenvalues",
                             eigenvalue_search(curve, cfg.m, np.zeros((2, 2)), n=16) == []))
        if electrostatic:
            ok = len(eig) == len(res["mode_matching"])
            err = float(max((abs(a - b) for a, b in zip(eig, res["mode_matching"])), default=0.0))
            checks.append(_check("mode_matching", ok and err < 1e-6, err))
    return res, checks


def cmd_layer_transfer(cfg, check):
    import scipy.linalg

    from .layer import (constant_inverse, invert_layer_operator, jump_matrix, layer_grid, layer_operator_apply,
                        layer_transfer, profile, renormalized_coefficient, scaling_from_quadrature)
    from .matfun import scaling_matrix

    rep = dirac_rep(2)
    nu = _normal(2)
    V = cfg.potential(nu)
    prof = profile(cfg.profile)
    eps, xi = cfg.eps[0], cfg.xi[0]
    M = layer_transfer(V, prof, cfg.z, cfg.m, xi, eps, rep)
    J = jump_matrix(renormalized_coefficient(V, nu, rep), nu, rep)
    res = {"eps": eps, "xi": xi, "M": M, "J": J, "J_inverse": np.linalg.inv(J),
           "transfer_minus_inverse_jump": float(np.linalg.norm(M - np.linalg.inv(J), 2))}
    checks = []
    if check:
        rng = np.random.default_rng(cfg.seed)
        ind = profile("indicator")
        an = alpha_dot(rep, nu)
        e1 = e2 = e3 = e4 = 0.0
        for _ in range(cfg.samples):
            Vr = _random_hermitian(rng, 2, rng.uniform(0.05, 1.0))
            Mr = layer_transfer(Vr, ind, 0.0, 0.0, 0.0, eps, rep)
            Jr = jump_matrix(renormalized_coefficient(Vr, nu, rep), nu, rep)
            e1 = max(e1, float(np.linalg.norm(scipy.linalg.expm(-1j * an @ Vr) - np.linalg.inv(Jr), 2)))
            e1 = max(e1, float(np.linalg.norm(Mr - np.linalg.inv(Jr), 2)))
            e2 = max(e2, float(np.max(np.abs(scaling_from_quadrature(Vr, nu, prof, rep)
                                             - scaling_matrix(Vr, nu, rep).S))))
            e4 = max(e4, abs(abs(np.linalg.det(Jr)) - 1))
            Vh = _random_hermitian(rng, 2, 0.5)
            t, _ = layer_grid(cfg.nt * 2)
            c = rng.normal(size=(4, 2)) + 1j * rng.normal(size=(4, 2))
            f = sum(np.outer(t**k, c[k]) for k in range(4))
            g = invert_layer_operator(f, Vh, nu, prof, rep)
            e3 = max(e3, float(np.max(np.abs(layer_operator_apply(g, Vh, nu, prof, rep) - f))))
            phi = c[0]
            gc = invert_layer_operator(np.tile(phi, (len(t), 1)), Vh, nu, prof, rep)
            e3 = max(e3, float(np.max(np.abs(gc - constant_inverse(phi, Vh, nu, prof, t, rep)))))
        checks += [_check("transfer_jump_identity", e1 < 1e-10, e1),
                   _check("scaling_quadrature", e2 < 1e-9, e2),
                   _check("layer_inverse", e3 < 1e-9, e3),
                   _check("jump_det_modulus", e4 < 1e-12, e4)]
    return res, checks


def cmd_fiber_gap(cfg, check):
    from .fiber import NU, fiber_resolvent_gap
    from .layer import profile

    V = cfg.potential(NU)
    prof = profile(cfg.profile)
    eps = cfg.eps[0]
    gaps = [fiber_resolvent_gap(x, eps, cfg.z, cfg.m, V, p=cfg.p, prof=prof, mode=cfg.mode) for x in cfg.xi]
    res = {"eps": eps, "mode": cfg.mode, "xi": list(cfg.xi), "gaps": gaps, "max_gap": max(gaps)}
    checks = []
    if check:
        x0 = cfg.xi[int(np.argmax(gaps))]
        zero = fiber_resolvent_gap(x0, eps, cfg.z, cfg.m, 0 * V, p=cfg.p, prof=prof)
        half = fiber_resolvent_gap(x0, eps / 2, cfg.z, cfg.m, V, p=cfg.p, prof=prof)
        full = fiber_resolvent_gap(x0, eps, cfg.z, cfg.m, V, p=cfg.p, prof=prof)
        checks += [_check("zero_potential", zero < 1e-6, zero),
                   _check("halving_decreases", half < full, [full, half])]
    return res, checks


def cmd_converge(cfg, check, out):
    rep = run_converge(cfg)
    emit(rep, "csv", os.path.join(out, "converge.csv"))
    res = rep.to_dict()
    checks = []
    if check:
        eps = np.asarray(cfg.eps)
        checks.append(_check("ladder_decreasing", bool(np.all(np.diff(eps) < 0))))
        e = 2.0 ** -np.arange(2, 10)
        s, _, r2 = rate_fit(np.stack([e, 3 * e], 1))
        checks.append(_check("rate_fit_exact", abs(s - 1) < 1e-12 and abs(r2 - 1) < 1e-12, s))
        checks.append(_check("emission_stable", format_csv(rep) == format_csv(rep.to_dict())))
        if not rep.degenerate:
            checks.append(_check("positive_gaps", all(g > 0 for _, g in rep.samples)))
    return res, checks


def cmd_norms(cfg, check):
    from .bie import b0_assemble_and_norm
    from .kernels import KernelParams
    from .layer import profile
    from .quad import gauss_legendre, sign_kernel_matrix

    curve = cfg.build_curve()
    if not curve.closed:
        raise ValueError("norms needs a closed curve")
    prof = profile(cfg.profile)
    V = cfg.potential(_normal(2))
    out = b0_assemble_and_norm(curve, KernelParams(cfg.z, cfg.m), prof.q_sup, V, cfg.n, cfg.nt)
    res = {k: v for k, v in out.items() if k != "matrix"}
    res.update({"n": cfg.n, "nt": cfg.nt})
    checks = []
    if check:
        _, w = gauss_legendre(cfg.nt)
        Tm = sign_kernel_matrix(cfg.nt)
        dense = float(np.linalg.svd(np.sqrt(w)[:, None] * Tm / np.sqrt(w)[None, :], compute_uv=False)[0])
        checks.append(_check("sign_kernel_dense_oracle", abs(dense - out["sign_kernel_norm"]) < 1e-12, dense))
        checks.append(_check("sign_kernel_two_over_pi", abs(out["sign_kernel_norm"] - 2 / np.pi) < 1e-6,
                             out["sign_kernel_norm"]))
        if curve.family == "circle" and cfg.z == 0:
            checks.append(_check("h12_lower_bound", out["norm_h12"] >= 4 / np.pi - 0.05, out["norm_h12"]))
    return res, checks


COMMANDS = {
    "renormalize": cmd_renormalize,
    "kernel-eval": cmd_kernel_eval,
    "bie-solve": cmd_bie_solve,
    "eigs": cmd_eigs,
    "layer-transfer": cmd_layer_transfer,
    "fiber-gap": cmd_fiber_gap,
    "norms": cmd_norms,
}


def build_parser():
    parser = argparse.ArgumentParser(prog="deltashell", description=__doc__.splitlines()[0])
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="flat key = value config file")
    common.add_argument("--set", action="append", default=[], metavar="KEY=VALUE", help="override a config key")
    common.add_argument("--out", help="output directory (default: $DSHELL_OUT or ./out)")
    common.add_argument("--check", action="store_true", help="run the invariant suite; nonzero exit on failure")
    sub = parser.add_subparsers(dest="command", required=True)
    for kind in KINDS:
        sub.add_parser(kind, parents=[common], help=f"run the {kind} experiment")
    return parser


def run(argv=None):
    """Parse ``argv``, run the subcommand and return (exit code, result dict)."""
    args = build_parser().parse_args(argv)
    overrides = list(args.set)
    if args.command in CLOSED_KINDS and not any(s.split("=")[0].strip() == "curve.kind" for s in overrides):
        text = open(args.config).read() if args.config else ""
        if "curve.kind" not in text:
            overrides.insert(0, "curve.kind = circle")
    cfg = load_config(args.config, overrides, kind=args.command)
    out = output_dir(args.out, cfg)
    if args.command == "converge":
        res, checks = cmd_converge(cfg, args.check, out)
    else:
        res, checks = COMMANDS[args.command](cfg, args.check)
    payload = {"command": args.command, "config": cfg.to_dict(), "config_sha256": cfg.digest(), "result": res}
    if args.check:
        payload["checks"] = checks
    path = os.path.join(out, f"{args.command}.json")
    with open(path, "w", newline="\n") as fh:
        fh.write(dumps_json(payload))
    failed = [c["name"] for c in checks if not c["passed"]]
    print(f"{args.command}: wrote {path}")
    for c in checks:
        print(f"  {'PASS' if c['passed'] else 'FAIL'} {c['name']}")
    return (1 if failed else 0), payload


def main(argv=None):
    try:
        code, _ = run(argv)
    except (ValueError, OSError, np.linalg.LinAlgError) as exc:
        print(f"deltashell: error: {exc}", file=sys.stderr)
        return 2
    return code


if __name__ == "__main__":
    sys.exit(main())
