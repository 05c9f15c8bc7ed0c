"""Spin up the run service against a generated workspace and exercise it.

Prepares a home directory (datasets, trained models), starts the HTTP
service in-process, submits a run, re-factorizes it at a new perspective
count without re-executing detectors, and fetches the metric table —
the same call sequence the browser UI performs.
"""

import tempfile
import threading
import time
from pathlib import Path

import httpx
import uvicorn

from outlier_explorer import (CorpusSpec, generate_synthetic_corpus, save_csv,
                              train_all)
from outlier_explorer.service import create_app

home = Path(tempfile.mkdtemp())
(home / "datasets").mkdir()
print(f"workspace: {home}")

corpus = generate_synthetic_corpus(
    12, rng_seed=5, spec=CorpusSpec(n_range=(100, 160), m_range=(6, 12)))
for i, dataset in enumerate(corpus[:3]):
    save_csv(dataset, home / "datasets" / f"ds{i}.csv")
print("training models ...")
bundle, _ = train_all(corpus, split_seed=0)
bundle.save(home / "models.json")

app = create_app(data_root=home / "datasets", model_bundle=home / "models.json",
                 runs_dir=home / "runs")
server = uvicorn.Server(uvicorn.Config(app, host="127.0.0.1", port=8977,
                                       log_level="warning"))
thread = threading.Thread(target=server.run, daemon=True)
thread.start()
while not server.started:
    time.sleep(0.05)

base = "http://127.0.0.1:8977"
with httpx.Client(base_url=base, timeout=60) as client:
    print("datasets:", client.get("/datasets").json())
    # the budget must suit the dataset scale: every algorithm needs a
    # reachable share of it, so small datasets want small budgets
    run_id = client.post("/runs", json={
        "dataset": "ds0.csv", "label_column": "label",
        "t_total": 0.2, "g": 1, "gamma": 150,
    }).json()["run_id"]
    print("submitted run", run_id)
    while True:
        status = client.get(f"/runs/{run_id}").json()["status"]
        print("  status:", status)
        if status in ("completed", "infeasible", "failed"):
            break
        time.sleep(0.3)
    if status == "completed":
        executions = client.get("/stats").json()["executions"]
        payload = client.patch(f"/runs/{run_id}/perspectives",
                               json={"g": 3}).json()
        print(f"re-factorized to g={payload['g']} "
              f"({len(payload['components'])} components); executions "
              f"unchanged: {client.get('/stats').json()['executions'] == executions}")
        table = client.get(f"/runs/{run_id}/metrics").json()["table"]
        print("metric table Ns:", sorted(int(k) for k in table))
server.should_exit = True
thread.join(timeout=5)
print("done; serve the browser UI with: outlier-explorer serve "
      f"--data-root {home / 'datasets'} --models {home / 'models.json'}")
