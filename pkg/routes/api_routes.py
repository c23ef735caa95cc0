"""
routes/api_routes.py
API Routes - JSON API endpoints
"""

import math

from flask import Blueprint, current_app, jsonify, request

from config import Config
from services import catalog_service, geometry_service, hilbert_service, homog_service
from services.errors import InvalidParameterError, KahlerError, NumericalError
from services.homog_service import format_fraction

api_bp = Blueprint('api', __name__, url_prefix='/api')


@api_bp.errorhandler(KahlerError)
def handle_kahler_error(exc):
    """Validation errors are the caller's fault (400); numerical failures are 422."""
    code = 422 if isinstance(exc, NumericalError) else 400
    current_app.logger.warning("%s %s -> %d: %s", request.method, request.path, code, exc)
    return jsonify({'error': str(exc)}), code


def _float_arg(name, default=None):
    raw = request.args.get(name, '').strip()
    if not raw:
        if default is None:
            raise InvalidParameterError(f"query parameter '{name}' is required")
        return default
    try:
        return float(homog_service.to_fraction(raw))
    except InvalidParameterError:
        raise InvalidParameterError(f"query parameter '{name}' is not a number: {raw!r}") from None


def _float_list_arg(name, default):
    raw = request.args.get(name, default)
    try:
        return [float(t) for t in raw.split(',') if t.strip()]
    except ValueError:
        raise InvalidParameterError(f"query parameter '{name}' is not a comma-separated list: {raw!r}") from None


@api_bp.route('/invariants/<spec>')
def get_invariants(spec):
    """
    Invariants of one catalog entry, e.g. /api/invariants/I:2,3.
    """
    d = catalog_service.parse_domain_spec(spec)
    result = d.to_json()
    result['entropy'] = format_fraction(catalog_service.entropy_symmetric(d))
    return jsonify(result), 200


@api_bp.route('/root-constants/<spec>')
def get_root_constants(spec):
    d = catalog_service.parse_domain_spec(spec)
    return jsonify(catalog_service.symmetric_root_constants(d).to_json()), 200


@api_bp.route('/entropy/<spec>')
def get_entropy(spec):
    """
    Exact entropy of the Bergman metric of spec; ?lambda=x rescales the metric.
    """
    c = catalog_service.symmetric_root_constants(catalog_service.parse_domain_spec(spec))
    value = homog_service.entropy_homogeneous(c)
    lam = request.args.get('lambda', '').strip()
    if lam:
        value = homog_service.entropy_scaled(value, lam)
    return jsonify({'spec': spec, 'entropy': format_fraction(value),
                    'argmax': homog_service.argmax_index(c)}), 200


@api_bp.route('/epsilon')
def get_epsilon():
    """
    epsilon = e^{-lambda phi} K(z, z̄) along sample radii, e.g.
    /api/epsilon?model=disk&lambda=2&radii=0,0.3,0.6
    """
    model = geometry_service.parse_model_spec(request.args.get('model', 'disk'), _float_arg('mu', 1.0))
    lam = _float_arg('lambda')
    degree = request.args.get('degree', type=int)
    ka = hilbert_service.build_space(model, lam, degree)
    points = geometry_service.sample_points(model, _float_list_arg('radii', '0,0.3,0.6,0.9'),
                                            _float_list_arg('angles', '0'))
    rows = hilbert_service.epsilon_report(ka, points)
    return jsonify({
        'model': model.label,
        'lambda': lam,
        'N': ka.degree,
        'quadrature': ka.quadrature_spec,
        'rel_tol': Config.BALANCE_REL_TOL,
        'rows': rows,
    }), 200


@api_bp.route('/check-balanced')
def get_check_balanced():
    """
    Balanced test of lambda * g on a model domain; a degenerate space is
    reported with verdict 'degenerate' and balanced false.
    """
    model = geometry_service.parse_model_spec(request.args.get('model', 'disk'), _float_arg('mu', 1.0))
    lam = _float_arg('lambda')
    balanced, report = hilbert_service.check_balanced(model, lam, request.args.get('degree', type=int))
    return jsonify({
        'model': model.label,
        'lambda': lam,
        'balanced': balanced,
        'verdict': report.verdict,
        'mean': report.mean if math.isfinite(report.mean) else None,
        'deviation': report.deviation if math.isfinite(report.deviation) else None,
        'rel_tol': report.rel_tol,
        'truncation_limited': report.truncation_limited,
        'message': report.message,
    }), 200
