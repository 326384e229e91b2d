import os
import logging
from flask import Flask
from dotenv import load_dotenv

# Load environment variables from .env file
load_dotenv()

__version__ = '1.0.0'


def _env_float(name, default):
    return float(os.getenv(name, default))


def create_app(test_config=None):
    app = Flask(__name__)

    level = os.getenv('LOG_LEVEL', 'INFO').upper()
    logging.basicConfig(
        level=getattr(logging, level, logging.INFO),
        format='%(asctime)s %(levelname)s %(name)s %(message)s'
    )
    app.logger.setLevel(getattr(logging, level, logging.INFO))

    # Sessionizer and anchor limits, in seconds
    app.config['DAT_MERGE_GAP_SECONDS'] = _env_float('DAT_MERGE_GAP_SECONDS', 30)
    app.config['DAT_IDLE_THRESHOLD_SECONDS'] = _env_float('DAT_IDLE_THRESHOLD_SECONDS', 300)
    app.config['DAT_ANCHOR_MAX_GAP_SECONDS'] = _env_float('DAT_ANCHOR_MAX_GAP_SECONDS', 1800)
    app.config['DAT_ANCHOR_MAX_TOTAL_SECONDS'] = _env_float('DAT_ANCHOR_MAX_TOTAL_SECONDS', 7200)

    # Aggregation and experiments
    app.config['DAT_WINSORIZE_P'] = _env_float('DAT_WINSORIZE_P', 0.99)
    app.config['DAT_TRIM'] = _env_float('DAT_TRIM', 0.10)
    app.config['DAT_TREND_PERIOD'] = os.getenv('DAT_TREND_PERIOD', 'W')

    app.config['DAT_SIM_SEED'] = int(os.getenv('DAT_SIM_SEED', 42))
    app.config['DAT_TIMELINE_WIDTH'] = int(os.getenv('DAT_TIMELINE_WIDTH', 96))

    if test_config:
        app.config.update(test_config)

    # Register blueprints
    from .commands import telemetry, dat, metrics, experiment, simulation

    app.register_blueprint(telemetry)
    app.register_blueprint(dat)
    app.register_blueprint(metrics)
    app.register_blueprint(experiment)
    app.register_blueprint(simulation)

    return app
