#!/usr/bin/env python3
"""Read-only HTTP API over the run ledger.

Endpoints:
  GET /run/<digest>
    - 200: {"digest": "...", "op": "witness-sample", "group": "F2", "seed": 7,
            "status": "pass", "exit_code": 0, "report": "format=proxlab/1\\n..."}
    - 404: {"error": "not_found", "digest": "..."}

  POST /runs/batch
    - Body: {"digests": ["9f2c...", "41ab...", ...]}
    - 200: {"results": {"9f2c...": {...}}, "not_found": ["41ab..."], ...}

  GET /health
"""

import os

from flask import Flask, jsonify, request

# Optional Swagger documentation
try:
    from flasgger import Swagger
    SWAGGER_AVAILABLE = True
except ImportError:
    SWAGGER_AVAILABLE = False

from run_config import DEFAULT_DB_PATH
from run_store import get_run_by_digest, get_runs_batch, init_db

MAX_BATCH_SIZE = 10000

app = Flask(__name__)
app.config["DB_PATH"] = os.environ.get("PROXLAB_DB", DEFAULT_DB_PATH)

if SWAGGER_AVAILABLE:
    swagger_config = {
        "headers": [],
        "specs": [
            {
                "endpoint": "apispec",
                "route": "/apispec.json",
                "rule_filter": lambda rule: True,
                "model_filter": lambda tag: True,
            }
        ],
        "static_url_path": "/flasgger_static",
        "swagger_ui": True,
        "specs_route": "/api-docs",
    }
    swagger_template = {
        "swagger": "2.0",
        "info": {
            "title": "Proximal Shift Toolkit run ledger",
            "description": "Lookup of recorded toolkit runs and sweep rows by digest",
            "version": "1.0.0",
        },
        "basePath": "/",
    }
    swagger = Swagger(app, config=swagger_config, template=swagger_template)

init_db(app.config["DB_PATH"])


@app.get("/run/<digest>")
def get_run(digest: str):
    """
    Get a recorded run by digest.
    ---
    tags:
      - Runs
    parameters:
      - name: digest
        in: path
        type: string
        required: true
        description: SHA-256 run digest (64 hex characters)
    responses:
      200:
        description: Run found
        schema:
          type: object
          properties:
            digest:
              type: string
            op:
              type: string
            group:
              type: string
            seed:
              type: integer
            status:
              type: string
            exit_code:
              type: integer
            report:
              type: string
      404:
        description: Run not found
    """
    # runs are upserted by re-runs and sweeps, so every request reads the ledger
    record = get_run_by_digest(digest, app.config["DB_PATH"])
    if record is None:
        return jsonify({"error": "not_found", "digest": digest}), 404
    return jsonify(record.as_dict())


@app.post("/runs/batch")
def get_runs():
    """
    Batch lookup for multiple digests.
    ---
    tags:
      - Runs
    parameters:
      - name: body
        in: body
        required: true
        schema:
          type: object
          required:
            - digests
          properties:
            digests:
              type: array
              items:
                type: string
    responses:
      200:
        description: Batch lookup results
      400:
        description: Bad request (invalid input)
    """
    if not request.is_json:
        return jsonify({"error": "Content-Type must be application/json"}), 400

    data = request.get_json(silent=True)
    if not data or "digests" not in data:
        return jsonify({"error": "Missing 'digests' field in request body"}), 400

    digests = data.get("digests", [])
    if not isinstance(digests, list) or not all(isinstance(d, str) for d in digests):
        return jsonify({"error": "'digests' must be an array of strings"}), 400

    if len(digests) == 0:
        return jsonify({"results": {}, "not_found": []}), 200

    if len(digests) > MAX_BATCH_SIZE:
        return jsonify({
            "error": f"Batch size exceeds maximum of {MAX_BATCH_SIZE}",
            "received": len(digests),
        }), 400

    # dict.fromkeys keeps first occurrences in order
    unique = list(dict.fromkeys(digests))
    found = get_runs_batch(unique, app.config["DB_PATH"])

    results = {}
    not_found = []
    for digest in unique:
        if digest in found:
            results[digest] = found[digest].as_dict()
        else:
            not_found.append(digest)

    return jsonify({
        "results": results,
        "not_found": not_found,
        "total_requested": len(digests),
        "total_found": len(results),
        "total_not_found": len(not_found),
    }), 200


@app.get("/health")
def health():
    """
    Health check endpoint.
    ---
    tags:
      - System
    responses:
      200:
        description: Service is healthy
    """
    return jsonify({"status": "ok"})


if __name__ == "__main__":
    # development server; production runs under gunicorn (gunicorn_config.py)
    port = int(os.environ.get("PORT", 5000))
    app.run(host="0.0.0.0", port=port, debug=False, threaded=True)
