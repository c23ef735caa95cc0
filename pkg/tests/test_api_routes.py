# tests/test_api_routes.py
import math

import pytest


def test_home_redirects_to_catalog(client):
    resp = client.get('/')
    assert resp.status_code == 302
    assert resp.headers['Location'].endswith('/catalog')


def test_catalog_page_lists_domains(client):
    resp = client.get('/catalog?max_param=3')
    assert resp.status_code == 200
    html = resp.get_data(as_text=True)
    assert 'I:2,3' in html
    assert '17/18' in html
    assert 'I:4,4' not in html


def test_invariants_endpoint(client):
    resp = client.get('/api/invariants/I:2,3')
    assert resp.status_code == 200
    data = resp.get_json()
    assert data['genus'] == 5
    assert data['entropy'] == '4/5'


@pytest.mark.parametrize("spec", ['I:3,2', 'XI', 'ball:x'])
def test_invariants_rejects_bad_spec(client, spec):
    resp = client.get(f'/api/invariants/{spec}')
    assert resp.status_code == 400
    assert 'error' in resp.get_json()


def test_root_constants_endpoint(client):
    data = client.get('/api/root-constants/IV:5').get_json()
    assert data['rank'] == 2
    assert data['gamma'] == ['5/1', '5/1']


@pytest.mark.parametrize("query, expected", [('', '4/5'), ('?lambda=2', '2/5'), ('?lambda=4/5', '1/1')])
def test_entropy_endpoint(client, query, expected):
    data = client.get(f'/api/entropy/I:2,3{query}').get_json()
    assert data['entropy'] == expected
    assert data['argmax'] == 2


def test_epsilon_endpoint(client):
    resp = client.get('/api/epsilon?model=disk&lambda=2&radii=0,0.3,0.6')
    assert resp.status_code == 200
    data = resp.get_json()
    assert data['N'] == 64
    assert data['quadrature']['scheme'] == 'radial'
    assert [r['epsilon'] for r in data['rows']] == pytest.approx([1 / math.pi] * 3, rel=1e-8)


def test_epsilon_endpoint_requires_lambda(client):
    resp = client.get('/api/epsilon?model=disk')
    assert resp.status_code == 400
    assert 'lambda' in resp.get_json()['error']


def test_epsilon_endpoint_divergent_norm_is_422(client):
    resp = client.get('/api/epsilon?model=disk&lambda=0.9')
    assert resp.status_code == 422


@pytest.mark.parametrize("lam, balanced, verdict", [(2, True, 'balanced'), (0.9, False, 'degenerate')])
def test_check_balanced_endpoint(client, lam, balanced, verdict):
    resp = client.get(f'/api/check-balanced?model=disk&lambda={lam}')
    assert resp.status_code == 200
    data = resp.get_json()
    assert data['balanced'] is balanced
    assert data['verdict'] == verdict
    if not balanced:
        assert data['deviation'] is None
