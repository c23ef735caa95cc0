"""
routes/catalog_routes.py
Catalog Routes - invariants table of the bounded symmetric domains
"""

from flask import Blueprint, redirect, render_template, request, url_for

from services.catalog_service import catalog_table, entropy_symmetric
from services.homog_service import format_fraction

catalog_bp = Blueprint('catalog', __name__)


@catalog_bp.route('/')
def index():
    """Home page redirects to catalog."""
    return redirect(url_for('catalog.catalog'))


@catalog_bp.route('/catalog')
def catalog():
    """
    Display rank, a, b, dim, genus and the Bergman-metric entropy of every
    catalog entry with parameters up to max_param (default 6).
    """
    max_param = request.args.get('max_param', 6, type=int)
    max_param = min(max(max_param, 1), 12)
    rows = [
        {'domain': d, 'entropy': format_fraction(entropy_symmetric(d))}
        for d in catalog_table(max_param)
    ]
    return render_template('catalog.html', rows=rows, max_param=max_param)
