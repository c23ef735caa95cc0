"""
Main Flask application entry point for the Kähler entropy toolkit.

This module provides the application factory pattern for creating Flask app instances.
Routes are organized in separate blueprint modules in the routes package; the
click command group from cli.py is mounted under `flask entropy`.
"""

from flask import Flask

from cli import cli
from config import Config
from routes import register_blueprints


def create_app(test_config=None):
    """
    Application factory function to create and configure Flask app.
    """
    app = Flask(__name__)
    app.config.from_object(Config)
    app.json.sort_keys = app.config['JSON_SORT_KEYS']
    if test_config:
        app.config.update(test_config)

    register_blueprints(app)
    app.cli.add_command(cli, name='entropy')
    return app


if __name__ == '__main__':
    app = create_app()
    app.run(debug=True, host='0.0.0.0', port=5000)
