"""
cli.py
Command line front end - kahler-entropy

Subcommands: invariants, root-constants, entropy, epsilon, check-balanced,
estimate-entropy. Exit status 0 on success, 1 on domain / validation
errors, 2 when the numerics say no (not balanced, divergent norm, no
bracket), 64 on usage errors.

Rationals are printed as "num/den" and floats with 9 significant digits.
Every numeric artifact carries a provenance record of the tolerances used.
"""

import csv
import functools
import io
import json
import logging
import re
from dataclasses import replace
from fractions import Fraction
from typing import Any, Dict, List, Optional, Sequence

import click
import numpy as np

from config import Config
from services import catalog_service, entropy_service, geometry_service, hilbert_service, homog_service
from services.errors import KahlerError
from services.homog_service import format_fraction

logger = logging.getLogger(__name__)

EX_USAGE = 64

DOMAIN_SPEC = re.compile(r'^\s*(I|II|III|IV|V|VI|disk|ball)\s*(:\s*\d+(\s*,\s*\d+)*)?\s*$', re.IGNORECASE)
MODEL_SPEC = re.compile(r'^\s*(disk|ball|polydisk|typeI|I)\s*(:\s*\d+(\s*,\s*\d+)*)?\s*$', re.IGNORECASE)


# -- formatting --------------------------------------------------------------

def fmt(value) -> str:
    """9 significant digits for floats, num/den for rationals."""
    if isinstance(value, Fraction):
        return format_fraction(value)
    if isinstance(value, (float, np.floating)):
        return f"{float(value):.9g}"
    return str(value)


def _rounded(obj):
    if isinstance(obj, dict):
        return {k: _rounded(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_rounded(v) for v in obj]
    if isinstance(obj, (float, np.floating)):
        value = float(obj)
        if not np.isfinite(value):
            return str(value)
        return float(f"{value:.9g}")
    if isinstance(obj, Fraction):
        return format_fraction(obj)
    return obj


def _to_json(payload) -> str:
    return json.dumps(_rounded(payload), indent=2)


def _to_csv(rows: List[Dict[str, Any]], provenance: Dict[str, Any]) -> str:
    buf = io.StringIO()
    buf.write('# provenance: ' + ' '.join(f"{k}={fmt(v)}" for k, v in provenance.items()) + '\n')
    if rows:
        writer = csv.DictWriter(buf, fieldnames=list(rows[0]), lineterminator='\n')
        writer.writeheader()
        for row in rows:
            writer.writerow({k: fmt(v) for k, v in row.items()})
    return buf.getvalue()


def _to_table(rows: List[Dict[str, Any]], provenance: Optional[Dict[str, Any]] = None) -> str:
    if not rows:
        return ''
    headers = list(rows[0])
    cells = [[fmt(row[h]) for h in headers] for row in rows]
    widths = [max(len(h), *(len(c[i]) for c in cells)) for i, h in enumerate(headers)]
    lines = ['  '.join(h.ljust(w) for h, w in zip(headers, widths))]
    lines.append('  '.join('-' * w for w in widths))
    lines.extend('  '.join(c.ljust(w) for c, w in zip(row, widths)) for row in cells)
    if provenance:
        lines.append('# provenance: ' + ' '.join(f"{k}={fmt(v)}" for k, v in provenance.items()))
    return '\n'.join(lines)


def _optional(value) -> str:
    return "none" if value is None else fmt(float(value))


def emit(ctx: click.Context, text: str) -> None:
    path = ctx.obj.get('output') if ctx.obj else None
    if path:
        with click.open_file(path, 'w') as fh:
            fh.write(text if text.endswith('\n') else text + '\n')
    else:
        click.echo(text)


# -- parameter types ---------------------------------------------------------

class DomainSpecType(click.ParamType):
    name = 'SPEC'

    def __init__(self, allow_all: bool = False):
        self.allow_all = allow_all

    def convert(self, value, param, ctx):
        if self.allow_all and (value or '').strip().lower() == 'all':
            return 'all'
        if not DOMAIN_SPEC.match(value or ''):
            self.fail(f"unknown domain spec {value!r} (e.g. I:2,3, IV:5, VI, disk, ball:2)", param, ctx)
        return value


class ModelSpecType(click.ParamType):
    name = 'MODEL'

    def convert(self, value, param, ctx):
        if not MODEL_SPEC.match(value or ''):
            self.fail(f"unknown model {value!r} (disk, ball:n, polydisk:n, typeI:p,q)", param, ctx)
        return value


def parse_complex(text: str) -> complex:
    """'0.3+0.1i' -> (0.3+0.1j)."""
    try:
        return complex(str(text).strip().replace(' ', '').replace('i', 'j'))
    except ValueError:
        raise click.BadParameter(f"not a complex literal: {text!r}") from None


def parse_point(model: geometry_service.DomainModel, text: str) -> np.ndarray:
    """Comma-separated complex literals, or a row-major JSON matrix for typeI."""
    text = text.strip()
    if text.startswith('['):
        try:
            rows = json.loads(text)
        except json.JSONDecodeError as exc:
            raise click.BadParameter(f"malformed matrix {text!r}: {exc}") from None
        arr = np.array([[parse_complex(v) for v in row] for row in rows], dtype=complex)
    else:
        arr = np.array([parse_complex(t) for t in text.split(',') if t.strip()], dtype=complex)
        if model.kind is geometry_service.ModelKind.DISK and arr.size == 1:
            arr = arr.reshape(())
        elif model.kind is geometry_service.ModelKind.TYPE_I:
            arr = arr.reshape(model.coordinate_shape) if arr.size == model.n_vars else arr
    return geometry_service.as_points(model, arr)


def parse_floats(text: str) -> List[float]:
    try:
        return [float(t) for t in text.split(',') if t.strip()]
    except ValueError:
        raise click.BadParameter(f"not a comma-separated list of numbers: {text!r}") from None


FORMATS = ('json', 'csv', 'table')


def output_mode(default: str):
    """--format CHOICE plus --json/--csv/--table aliases; the command receives mode=<format>."""
    def decorator(f):
        @functools.wraps(f)
        def wrapper(*args, output_format, as_json, as_csv, as_table, **kwargs):
            chosen = [name for name, flag in zip(FORMATS, (as_json, as_csv, as_table)) if flag]
            if len(chosen) > 1:
                raise click.UsageError(f"conflicting output flags: {', '.join('--' + c for c in chosen)}")
            return f(*args, mode=chosen[0] if chosen else output_format, **kwargs)

        wrapper = click.option('--table', 'as_table', is_flag=True, help='Same as --format table.')(wrapper)
        wrapper = click.option('--csv', 'as_csv', is_flag=True, help='Same as --format csv.')(wrapper)
        wrapper = click.option('--json', 'as_json', is_flag=True, help='Same as --format json.')(wrapper)
        wrapper = click.option('--format', 'output_format', type=click.Choice(FORMATS), default=default,
                               show_default=True, help='Output format.')(wrapper)
        return wrapper
    return decorator


# -- group -------------------------------------------------------------------

class KahlerGroup(click.Group):
    """Maps usage errors to exit 64 and service errors to their exit codes."""

    def make_context(self, *args, **kwargs):
        try:
            return super().make_context(*args, **kwargs)
        except click.UsageError as exc:
            exc.exit_code = EX_USAGE
            raise

    def invoke(self, ctx):
        try:
            return super().invoke(ctx)
        except click.UsageError as exc:
            exc.exit_code = EX_USAGE
            raise
        except KahlerError as exc:
            logger.debug("command failed", exc_info=True)
            click.echo(f"error: {exc}", err=True)
            ctx.exit(exc.exit_code)


@click.group(cls=KahlerGroup)
@click.option('-o', '--output', type=click.Path(dir_okay=False, writable=True), default=None,
              help='Write the artifact to a file instead of stdout.')
@click.option('-v', '--verbose', is_flag=True, help='Debug logging on stderr.')
@click.pass_context
def cli(ctx, output, verbose):
    """Diastatic entropy and balanced metrics on bounded domains."""
    logging.basicConfig(format='%(name)s:%(levelname)s:%(message)s',
                        level=logging.DEBUG if verbose else logging.WARNING)
    ctx.ensure_object(dict)
    ctx.obj['output'] = output


# -- exact commands ----------------------------------------------------------

def _invariant_row(d: catalog_service.DomainDescriptor) -> Dict[str, Any]:
    row = d.to_json()
    row['entropy'] = format_fraction(catalog_service.entropy_symmetric(d))
    return row


@cli.command()
@click.argument('spec', type=DomainSpecType(allow_all=True))
@click.option('--max-param', type=click.IntRange(1, 32), default=6, show_default=True,
              help="Largest family parameter listed by 'invariants all'.")
@output_mode('table')
@click.pass_context
def invariants(ctx, spec, max_param, mode):
    """Rank, a, b, dim, genus and entropy of SPEC (or 'all')."""
    if spec == 'all':
        rows = [_invariant_row(d) for d in catalog_service.catalog_table(max_param)]
    else:
        rows = [_invariant_row(catalog_service.parse_domain_spec(spec))]
    if mode == 'json':
        emit(ctx, _to_json(rows if spec == 'all' else rows[0]))
    else:
        flat = [dict(r, params=','.join(str(p) for p in r['params'])) for r in rows]
        emit(ctx, _to_csv(flat, {'arithmetic': 'exact'}).rstrip('\n') if mode == 'csv' else _to_table(flat))


@cli.command('root-constants')
@click.argument('spec', type=DomainSpecType())
@click.option('--mu', type=str, default=None, help='Constants of mu * g_min instead (gamma_k = mu).')
@output_mode('json')
@click.pass_context
def root_constants(ctx, spec, mu, mode):
    """RootConstants of the Bergman metric of SPEC, as JSON."""
    c = catalog_service.symmetric_root_constants(catalog_service.parse_domain_spec(spec))
    if mu is not None:
        c = homog_service.scale_constants(replace(c, gamma=(1,) * c.rank), mu)
    if mode == 'json':
        emit(ctx, json.dumps(c.to_json(), indent=2))
    else:
        rows = [{'k': k + 1, 'p': c.p[k], 'q': c.q[k], 'b': c.b[k], 'gamma': c.gamma[k]} for k in range(c.rank)]
        emit(ctx, _to_csv(rows, {'arithmetic': 'exact'}).rstrip('\n') if mode == 'csv' else _to_table(rows))


def _constants_for(spec: Optional[str], from_constants: Optional[str]) -> homog_service.RootConstants:
    if bool(spec) == bool(from_constants):
        raise click.UsageError('give exactly one of SPEC or --from-constants FILE')
    if from_constants:
        return homog_service.load_constants(from_constants)
    return catalog_service.symmetric_root_constants(catalog_service.parse_domain_spec(spec))


@cli.command()
@click.argument('spec', type=DomainSpecType(), required=False)
@click.option('--from-constants', type=click.Path(exists=True, dir_okay=False), default=None,
              help='RootConstants JSON file.')
@click.option('--bergman', is_flag=True, help='Use the Bergman gamma_k = 2 + p_k + q_k + b_k.')
@click.option('--lambda', 'lam', type=str, default=None, help='Entropy of lambda * g (rational or decimal).')
@output_mode('table')
@click.pass_context
def entropy(ctx, spec, from_constants, bergman, lam, mode):
    """Exact diastatic entropy max_k (1 + p_k + b_k + q_k/2) / gamma_k."""
    c = _constants_for(spec, from_constants)
    if bergman:
        c = homog_service.bergman_gamma(c)
    value = homog_service.entropy_homogeneous(c)
    if lam is not None:
        value = homog_service.entropy_scaled(value, homog_service.to_fraction(lam))
    result = {'entropy': format_fraction(value), 'argmax': homog_service.argmax_index(c)}
    if mode == 'json':
        emit(ctx, json.dumps(result, indent=2))
    elif mode == 'csv':
        emit(ctx, _to_csv([result], {'arithmetic': 'exact'}).rstrip('\n'))
    else:
        emit(ctx, result['entropy'])


# -- numerical commands ------------------------------------------------------

def _model(spec: str, mu: float) -> geometry_service.DomainModel:
    return geometry_service.parse_model_spec(spec, mu)


@cli.command()
@click.argument('model', type=ModelSpecType())
@click.option('--lambda', 'lam', type=float, required=True)
@click.option('--mu', type=float, default=1.0, show_default=True)
@click.option('--degree', type=click.IntRange(0), default=None, help='Truncation N of the monomial basis.')
@click.option('--radii', default='0,0.3,0.6,0.9', show_default=True)
@click.option('--angles', default='0', show_default=True)
@click.option('--rel-tol', type=float, default=None, help='Tolerance of the truncation tail check.')
@output_mode('table')
@click.pass_context
def epsilon(ctx, model, lam, mu, degree, radii, angles, rel_tol, mode):
    """Tabulate epsilon = e^{-lambda phi} K(z, z̄) along sample radii."""
    m = _model(model, mu)
    rel_tol = Config.BALANCE_REL_TOL if rel_tol is None else rel_tol
    ka = hilbert_service.build_space(m, lam, degree)
    points = geometry_service.sample_points(m, parse_floats(radii), parse_floats(angles))
    rows = hilbert_service.epsilon_report(ka, points, rel_tol)
    provenance = dict({'model': m.label, 'mu': mu, 'lambda': lam, 'N': ka.degree, 'rel_tol': rel_tol},
                      **ka.quadrature_spec)
    if mode == 'json':
        emit(ctx, _to_json({'provenance': provenance, 'rows': rows}))
    elif mode == 'csv':
        emit(ctx, _to_csv(rows, provenance).rstrip('\n'))
    else:
        emit(ctx, _to_table(rows, provenance))


@cli.command('check-balanced')
@click.argument('model', type=ModelSpecType(), required=False)
@click.option('--lambda', 'lam', type=str, required=True)
@click.option('--mu', type=float, default=1.0, show_default=True)
@click.option('--degree', type=click.IntRange(0), default=None)
@click.option('--rel-tol', type=float, default=None)
@click.option('--from-constants', type=click.Path(exists=True, dir_okay=False), default=None,
              help='Exact test on a homogeneous domain given by RootConstants JSON.')
@output_mode('table')
@click.pass_context
def check_balanced(ctx, model, lam, mu, degree, rel_tol, from_constants, mode):
    """Is lambda * g balanced? Exit 0 if yes, 2 if not or inconclusive."""
    if bool(model) == bool(from_constants):
        raise click.UsageError('give exactly one of MODEL or --from-constants FILE')
    if from_constants:
        c = homog_service.load_constants(from_constants)
        balanced, threshold = homog_service.is_balanced_homogeneous(c, lam)
        result = {'verdict': 'balanced' if balanced else 'not balanced',
                  'lambda': format_fraction(homog_service.to_fraction(lam)),
                  'threshold': format_fraction(threshold)}
        provenance = {'arithmetic': 'exact'}
    else:
        m = _model(model, mu)
        lam_value = float(homog_service.to_fraction(lam))
        balanced, report = hilbert_service.check_balanced(m, lam_value, degree, rel_tol=rel_tol)
        result = {'verdict': report.verdict, 'mean': report.mean, 'deviation': report.deviation,
                  'truncation_limited': report.truncation_limited}
        if report.message:
            result['message'] = report.message
        provenance = {'model': m.label, 'mu': mu, 'lambda': lam, 'rel_tol': report.rel_tol}
        balanced = balanced and report.verdict == 'balanced'

    if mode == 'json':
        emit(ctx, _to_json({'provenance': provenance, **result}))
    elif mode == 'csv':
        emit(ctx, _to_csv([result], provenance).rstrip('\n'))
    else:
        emit(ctx, _to_table([result], provenance))
    if not balanced:
        ctx.exit(2)


@cli.command('estimate-entropy')
@click.argument('model', type=ModelSpecType())
@click.option('--mu', type=float, default=1.0, show_default=True)
@click.option('--tol', type=float, default=None, help='Bracket width target.')
@click.option('--z0', default=None, help="Base point: '0.3+0.1i', '0.1,0.2i' or a JSON matrix.")
@click.option('--threads', type=click.IntRange(1), default=None)
@output_mode('json')
@click.pass_context
def estimate_entropy(ctx, model, mu, tol, z0, threads, mode):
    """Bracket the diastatic entropy at z0 by shell exhaustion."""
    m = _model(model, mu)
    point = parse_point(m, z0) if z0 else None
    estimate = entropy_service.estimate_entropy(m, point, tol=tol, threads=threads)
    result = estimate.to_json()
    result['model'] = m.label
    result['mu'] = mu
    provenance = {'tol': estimate.tol, 'j_min': Config.SHELL_J_MIN, 'j_max': Config.SHELL_J_MAX,
                  'convergent_ratio': Config.CONVERGENT_RATIO, 'divergent_ratio': Config.DIVERGENT_RATIO,
                  'nodes': Config.SHELL_NODES}
    if mode == 'json':
        emit(ctx, _to_json({'provenance': provenance, **result}))
    else:
        rows = [{'c': p.c, 'verdict': p.verdict.value,
                 'tail_ratio': p.ratios[-1] if p.ratios else float('nan')} for p in estimate.shells]
        summary = (f"bracket [{fmt(estimate.lower)}, {fmt(estimate.upper)}]"
                   f" extrapolated={_optional(estimate.extrapolated)}")
        if mode == 'csv':
            emit(ctx, _to_csv(rows, dict(provenance, lower=estimate.lower, upper=estimate.upper,
                                             extrapolated=_optional(estimate.extrapolated))).rstrip('\n'))
        else:
            emit(ctx, summary + '\n' + _to_table(rows, provenance))


def main(argv: Optional[Sequence[str]] = None):
    cli.main(args=argv, prog_name='kahler-entropy')


if __name__ == '__main__':
    main()
