"""The compliance query service and the measurement harness.

Starts the HTTP service in-process, exercises the transfer flow end to
end over the wire, then measures single-query inference latency and runs
a short open-loop load test.
"""

import json
import urllib.request

from cbcms.bench import measure_inference, run_load
from cbcms.dataset import default_rule_table, generate_split_dataset
from cbcms.forest import ForestParams, train_forest
from cbcms.policy import canonical_bytes, policy_from_dict
from cbcms.registry import Registry, generate_keypair, sign_bytes
from cbcms.service import ComplianceApp, ServiceConfig, start_service

train, _ = generate_split_dataset(default_rule_table(), 1500, noise_rate=0.0, seed=3)
model = train_forest(train, ForestParams(n_trees=50, seed=11))
app = ComplianceApp(model=model, registry=Registry())

handle = start_service(ServiceConfig(host="127.0.0.1", port=8329, workers=1), app)
print(f"service up at {handle.url}")


def call(method, path, body=None):
    data = json.dumps(body).encode() if body is not None else None
    request = urllib.request.Request(handle.url + path, data=data, method=method)
    if data:
        request.add_header("Content-Type", "application/json")
    with urllib.request.urlopen(request) as response:
        return json.loads(response.read())


try:
    # Identities and metadata.
    owner_private, owner_public = generate_keypair()
    user_private, user_public = generate_keypair()
    owner_id = call("POST", "/users", {"role": "owner", "public_key": owner_public})["user_id"]
    user_id = call("POST", "/users", {"role": "user", "public_key": user_public})["user_id"]
    data_id = call("POST", "/metadata", {
        "owner_id": owner_id, "data_category": "financial_data", "sensitivity_level": 2,
    })["data_id"]

    # Pure compliance query: deterministic body, masked to the pair.
    query = call("GET", "/policies/compliance?source=GDPR&target=PIPL"
                        "&category=financial_data&sensitivity=2")
    print(f"compliance query -> {query['labels'].count('1')} required actions, "
          f"CCPA block all zero: {set(query['labels'][24:36]) <= {'0'}}")

    # Transfer request, then confirmation by both signatures.
    transfer = call("POST", "/transfers", {
        "requester_id": user_id, "data_id": data_id, "source": "GDPR", "target": "PIPL",
    })
    print(f"transfer pending, {len(transfer['conflicts'])} conflicts")
    payload = canonical_bytes(policy_from_dict(transfer["merged_policy"]))
    confirmed = call("POST", f"/transfers/{transfer['token']}/confirm", {
        "owner_signature": sign_bytes(owner_private, payload),
        "user_signature": sign_bytes(user_private, payload),
    })
    print(f"confirmed: policy {confirmed['policy_id']}")
    print(f"audit verify -> {call('GET', '/audit/verify')}")

    # Harness: single-query latency (predict + decode), then open-loop load.
    timing = measure_inference(model, repetitions=200, warmup=20)
    stats = timing.combined
    print(f"\ninference: median {stats.median_ms:.3f}ms  std {stats.std_ms:.3f}ms  "
          f"p99 {stats.p99_ms:.3f}ms")

    load = run_load(handle.url, workers=4, rate=200, duration_s=2.0)
    print(f"load: offered {load.offered_rate:.0f}rps achieved {load.achieved_rps:.0f}rps "
          f"median {load.latency.median_ms:.2f}ms errors {load.errors}")
    noop = run_load(handle.url, workers=4, rate=200, duration_s=2.0, path="/healthz")
    print(f"no-op endpoint baseline: median {noop.latency.median_ms:.2f}ms "
          f"(harness+server overhead, separable from inference)")
finally:
    handle.stop()
    print("service stopped")
