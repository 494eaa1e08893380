"""Gunicorn configuration for the run-ledger API (results_api:app)."""

import multiprocessing

# Server socket
bind = "0.0.0.0:5000"
backlog = 2048

# Worker processes; ledger reads are short SQLite queries
workers = multiprocessing.cpu_count() * 2 + 1
worker_class = "sync"
timeout = 30
keepalive = 2

# Logging
accesslog = "-"
errorlog = "-"
loglevel = "info"
access_log_format = '%(h)s %(t)s "%(r)s" %(s)s %(b)s %(D)s'

proc_name = "proxlab_results"

daemon = False
pidfile = None

# Restart workers periodically, staggered
max_requests = 10000
max_requests_jitter = 1000
preload_app = True
