#!/usr/bin/env python3
"""Regenerates data/fixtures/. Output is deterministic; rerun after editing."""

import json
import random
from pathlib import Path

ROOT = Path(__file__).resolve().parent.parent
OUT = ROOT / "data" / "fixtures"

SENSORS = {
    "Chiller 6": ["Chiller 6 Chiller Efficiency", "Chiller 6 Condenser Water Flow",
                  "Chiller 6 Supply Temperature", "Chiller 6 Return Temperature",
                  "Chiller 6 Power Input"],
    "Chiller 9": ["Chiller 9 Chiller Efficiency", "Chiller 9 Condenser Water Flow",
                  "Chiller 9 Supply Temperature", "Chiller 9 Power Input"],
    "Chiller 3": ["Chiller 3 Supply Temperature", "Chiller 3 Return Temperature",
                  "Chiller 3 Power Input"],
    "AHU 2": ["AHU 2 Supply Air Temperature", "AHU 2 Fan Speed", "AHU 2 Filter Pressure Drop"],
    "Pump 4": ["Pump 4 Discharge Pressure", "Pump 4 Motor Current", "Pump 4 Vibration"],
}

FAILURE_MODES = {
    "Chiller 6": ["Compressor Overheating", "Condenser Fouling", "Refrigerant Leak",
                  "Evaporator Water Side Fouling", "Excess Purge"],
    "Chiller 9": ["Compressor Overheating", "Condenser Fouling", "Refrigerant Leak"],
    "Chiller 3": ["Condenser Fouling", "Refrigerant Undercharge", "Oil Contamination"],
    "AHU 2": ["Filter Clogging", "Fan Belt Slippage", "Damper Stuck"],
    "Pump 4": ["Bearing Wear", "Impeller Erosion", "Seal Leak"],
}

ASSETS = list(SENSORS)


def registry():
    handlers = [
        {"server": "IoTAgent", "tool": "sites", "output": ["MAIN", "EAST"]},
        {"server": "IoTAgent", "tool": "assets",
         "output": [{"asset_id": a, "asset_name": a, "asset_type": a.split()[0]} for a in ASSETS]},
        {"server": "IoTAgent", "tool": "sensors", "output": [],
         "cases": [{"when": {"asset_id": a}, "output": s} for a, s in SENSORS.items()]},
        {"server": "IoTAgent", "tool": "history", "output": "/data/history/MAIN/timeseries.csv",
         "cases": [{"when": {"asset_id": a},
                    "output": "/data/history/MAIN/" + a.replace(" ", "_") + ".csv"} for a in ASSETS]},
        {"server": "FMSRAgent", "tool": "get_failure_modes", "output": [],
         "cases": [{"when": {"asset_name": a}, "output": m} for a, m in FAILURE_MODES.items()]},
        {"server": "FMSRAgent", "tool": "get_failure_mode_sensor_mapping",
         "output": {"mapping": {}, "note": "no overlap found"},
         "cases": [{"when": {"asset_name": a},
                    "output": {"mapping": {m: SENSORS[a][i % len(SENSORS[a]):][:2]
                                           for i, m in enumerate(FAILURE_MODES[a])}}}
                   for a in ASSETS]},
        {"server": "TSFMAgent", "tool": "get_ai_tasks",
         "output": ["forecasting", "anomaly_detection", "finetuning"]},
        {"server": "TSFMAgent", "tool": "get_tsfm_models",
         "output": ["ttm_96_28", "ttm_512_96", "ttm_1024_96"]},
        {"server": "TSFMAgent", "tool": "run_tsfm_forecasting", "output": "/data/forecast/forecast.csv"},
        {"server": "TSFMAgent", "tool": "run_tsfm_finetuning", "output": "/models/ttm_96_28_finetuned"},
        {"server": "TSFMAgent", "tool": "run_tsad", "output": "/data/anomaly/scores.csv"},
        {"server": "TSFMAgent", "tool": "run_integrated_tsad", "output": "/data/anomaly/labels.csv"},
        {"server": "Utilities", "tool": "current_date_time", "output": "2026-01-15T09:30:00"},
        {"server": "Utilities", "tool": "json_reader", "output": {"rows": 3, "columns": ["timestamp", "value"]}},
        {"server": "Utilities", "tool": "convert_units", "output": 7.2},
        {"server": "WorkOrderAgent", "tool": "get_work_orders",
         "output": [{"wo_id": "WO-1001", "type": "corrective", "code": "MT010"},
                    {"wo_id": "WO-1002", "type": "preventive", "code": "MT001"}]},
        {"server": "WorkOrderAgent", "tool": "get_preventive_work_orders",
         "output": [{"wo_id": "WO-1002", "code": "MT001"}]},
        {"server": "WorkOrderAgent", "tool": "get_corrective_work_orders",
         "output": [{"wo_id": "WO-1001", "code": "MT010"}]},
        {"server": "WorkOrderAgent", "tool": "get_events",
         "output": [{"event": "alarm", "time": "2025-11-02T04:10:00"}]},
        {"server": "WorkOrderAgent", "tool": "get_failure_codes", "output": ["MT001", "MT010", "MT013"]},
        {"server": "WorkOrderAgent", "tool": "get_work_order_distribution",
         "output": {"MT001": 12, "MT010": 5, "MT013": 2}},
        {"server": "WorkOrderAgent", "tool": "predict_next_work_order",
         "output": [{"code": "MT010", "probability": 0.61}, {"code": "MT001", "probability": 0.27}]},
        {"server": "WorkOrderAgent", "tool": "analyze_alert_to_failure",
         "output": {"alerts": 14, "failures": 3, "mean_lead_hours": 36.5}},
    ]
    return {"handlers": handlers}


def step(task, server, tool, args, deps, expected):
    return {"task": task, "server": server, "tool": tool, "args": args, "deps": deps, "expected": expected}


def render(steps):
    blocks = []
    for i, s in enumerate(steps, 1):
        deps = ", ".join(str(d) for d in s["deps"]) if s["deps"] else "None"
        args = json.dumps(s["args"], ensure_ascii=False) if s["server"] != "none" else "None"
        blocks.append("\n".join([
            f"#Task{i}: {s['task']}",
            f"#Agent{i}: {s['server']}",
            f"#Tool{i}: {s['tool']}",
            f"#Args{i}: {args}",
            f"#Dependency{i}: {deps}",
            f"#ExpectedOutput{i}: {s['expected']}",
        ]))
    return "\n\n".join(blocks) + "\n"


def plan_114(asset):
    return [
        step(f"Identify the asset ID for {asset} at the MAIN site", "IoTAgent", "assets",
             {"site_name": "MAIN"}, [], "List of assets at MAIN including " + asset),
        step(f"Retrieve the sensors installed on {asset}", "IoTAgent", "sensors",
             {"site_name": "MAIN", "asset_id": asset}, [1], "List of sensor names for " + asset),
        step(f"Retrieve the known failure modes of {asset}", "FMSRAgent", "get_failure_modes",
             {"asset_name": asset}, [], "List of failure modes for " + asset),
        step("Map failure modes to the sensors that can detect them", "FMSRAgent",
             "get_failure_mode_sensor_mapping",
             {"asset_name": asset, "failure_modes": "{step_3}", "sensors": "{step_2}"}, [2, 3],
             "Failure modes detectable from the available sensors"),
    ]


TEMPLATES = [
    ("What are the failure modes of {a} that can be identified by analyzing the data from the available sensors?",
     plan_114),
    ("Which failure modes could affect {a}?",
     lambda a: [step(f"Retrieve failure modes of {a}", "FMSRAgent", "get_failure_modes",
                     {"asset_name": a}, [], "List of failure modes")]),
    ("List every sensor installed on {a} at site MAIN.",
     lambda a: [step(f"List sensors of {a}", "IoTAgent", "sensors",
                     {"site_name": "MAIN", "asset_id": a}, [], "Sensor names")]),
    ("Forecast the next week of readings for {a} using the sensor history since 2025-06-01.",
     lambda a: [
         step(f"Download sensor history for {a}", "IoTAgent", "history",
              {"site_name": "MAIN", "asset_id": a, "start": "2025-06-01T00:00:00"}, [], "History file path"),
         step("Forecast the downloaded series", "TSFMAgent", "run_tsfm_forecasting",
              {"dataset_path": "{step_1}", "timestamp_column": "timestamp", "target_columns": SENSORS[a][:1]},
              [1], "Forecast file path")]),
    ("Detect anomalies in the recent sensor data of {a} by comparing it against a forecast.",
     lambda a: [
         step(f"Download sensor history for {a}", "IoTAgent", "history",
              {"site_name": "MAIN", "asset_id": a, "start": "2025-09-01T00:00:00"}, [], "History file path"),
         step("Forecast the downloaded series", "TSFMAgent", "run_tsfm_forecasting",
              {"dataset_path": "{step_1}", "timestamp_column": "timestamp", "target_columns": SENSORS[a][:2]},
              [1], "Forecast file path"),
         step("Score anomalies against the forecast", "TSFMAgent", "run_tsad",
              {"dataset_path": "{step_1}", "forecast_path": "{step_2}", "target_columns": SENSORS[a][:2]},
              [1, 2], "Anomaly score file path")]),
    ("Show the corrective work orders raised for {a} up to today.",
     lambda a: [
         step("Get the current date", "Utilities", "current_date_time", {}, [], "Current timestamp"),
         step(f"Retrieve corrective work orders of {a}", "WorkOrderAgent", "get_corrective_work_orders",
              {"asset_id": a, "end_date": "{step_1}"}, [1], "Corrective work orders")]),
    ("Predict the most likely next work order for {a} and explain the result.",
     lambda a: [
         step(f"Predict the next work order for {a}", "WorkOrderAgent", "predict_next_work_order",
              {"asset_id": a}, [], "Ranked work order types"),
         step("Summarize the prediction for the user", "none", "none", {}, [1], "Short explanation")]),
    ("How are work orders for {a} distributed across failure codes during 2025?",
     lambda a: [
         step(f"Compute work order distribution for {a}", "WorkOrderAgent", "get_work_order_distribution",
              {"asset_id": a, "start_date": "2025-01-01", "end_date": "2025-12-31"}, [],
              "Counts per failure code")]),
]

PARAPHRASE_FORMS = [
    "Could you tell me: {q}",
    "I need help with this request. {q}",
]


def lookup_output(reg, server, tool, args):
    for h in reg["handlers"]:
        if h["server"] == server and h["tool"] == tool:
            for c in h.get("cases", []):
                if all(args.get(k) == v for k, v in c["when"].items()):
                    return c["output"]
            return h["output"]
    raise KeyError((server, tool))


def resolve(value, outputs):
    if isinstance(value, str):
        if value.startswith("{step_") and value.endswith("}") and value[6:-1].isdigit():
            return outputs[int(value[6:-1])]
        for n, out in outputs.items():
            token = "{step_%d}" % n
            if token in value:
                text = out if isinstance(out, str) else json.dumps(out, separators=(",", ":"))
                value = value.replace(token, text)
        return value
    if isinstance(value, list):
        return [resolve(v, outputs) for v in value]
    if isinstance(value, dict):
        return {k: resolve(v, outputs) for k, v in value.items()}
    return value


def trace_for(reg, steps):
    outputs, records = {}, []
    for i, s in enumerate(steps, 1):
        if s["server"] == "none":
            outputs[i] = None
            records.append({"step": i, "server": "none", "tool": "none", "resolved_args": {}, "output": None})
            continue
        args = resolve(s["args"], outputs)
        out = lookup_output(reg, s["server"], s["tool"], args)
        outputs[i] = out
        records.append({"step": i, "server": s["server"], "tool": s["tool"], "resolved_args": args, "output": out})
    return records


def perturb(steps, k):
    """Plausible informed-baseline mistakes, chosen by scenario index."""
    steps = json.loads(json.dumps(steps))
    mode = k % 5
    if mode == 1 and len(steps) > 1:
        steps = steps[:-1]
    elif mode == 2:
        for s in steps:
            if s["tool"] == "get_failure_modes":
                s["tool"] = "get_failure_mode_sensor_mapping"
            elif s["tool"] == "get_corrective_work_orders":
                s["tool"] = "get_work_orders"
            elif s["tool"] == "run_tsad":
                s["tool"] = "run_integrated_tsad"
    elif mode == 3:
        for s in steps:
            if s["args"]:
                s["args"] = dict(list(s["args"].items())[:1])
                break
    elif mode == 4:
        for s in steps:
            if s["server"] == "IoTAgent":
                s["server"] = "TSFMAgent"
    return steps


def main():
    OUT.mkdir(parents=True, exist_ok=True)
    reg = registry()
    (OUT / "assetops.registry.json").write_text(json.dumps(reg, indent=2) + "\n")
    (OUT / "scenario_114.plan").write_text(render(plan_114("Chiller 6")))

    scenarios, candidates = [], {}
    n = 0
    for t, (question, build) in enumerate(TEMPLATES):
        for a in ASSETS:
            n += 1
            sid = "scenario-114" if (t == 0 and a == "Chiller 6") else f"scenario-{200 + n:03d}"
            steps = build(a)
            q = question.format(a=a)
            record = {"id": sid, "question": q, "gold_plan": render(steps),
                      "paraphrases": [p.format(q=q[0].lower() + q[1:]) for p in PARAPHRASE_FORMS], "traces": []}
            if any(s["deps"] for s in steps):
                record["traces"].append(trace_for(reg, steps))
            scenarios.append(record)
            candidates[sid] = render(perturb(steps, n))
    texts = [s["question"] for s in scenarios] + [p for s in scenarios for p in s["paraphrases"]]
    for i, x in enumerate(texts):
        for j, y in enumerate(texts):
            assert i == j or x not in y, (x, y)
    scenarios.sort(key=lambda s: s["id"])
    # One candidate that is not a valid plan at all.
    candidates[scenarios[-1]["id"]] = "I would first look up the asset and then check its sensors.\n"

    with open(OUT / "corpus.jsonl", "w") as f:
        for s in scenarios:
            f.write(json.dumps(s, ensure_ascii=False) + "\n")
    cand_dir = OUT / "candidates"
    cand_dir.mkdir(exist_ok=True)
    for sid, text in candidates.items():
        (cand_dir / f"{sid}.plan").write_text(text)

    # Informed-baseline judge replay: 30 test scenarios, 180 integer scores
    # summing to 518 (mean 2.8778).
    rng = random.Random(288)
    ids = [s["id"] for s in scenarios]
    test_ids = sorted(rng.sample(ids, 30))
    train_ids = sorted(set(ids) - set(test_ids))
    (OUT / "judge_baseline").mkdir(exist_ok=True)
    (OUT / "judge_baseline" / "manifest.json").write_text(json.dumps(
        {"seed": 288, "test_fraction": 0.75, "train_ids": train_ids, "test_ids": test_ids,
         "pattern_map": {}}, indent=2) + "\n")
    scores = [3] * 180
    for i in range(22):  # 540 - 22 = 518
        scores[(i * 7) % 180] -= 1
    for i in range(15):  # spread: same total, more variance
        a, b = (i * 11 + 3) % 180, (i * 13 + 5) % 180
        if scores[a] < 5 and scores[b] > 1 and a != b:
            scores[a] += 1
            scores[b] -= 1
    assert sum(scores) == 518
    dims = ["correctness", "server_routing", "tool_selection", "argument_quality", "efficiency",
            "dependency_correctness"]
    by_id = {s["id"]: s for s in scenarios}
    with open(OUT / "judge_baseline" / "verdicts.stub.jsonl", "w") as f:
        for k, sid in enumerate(test_ids):
            verdict = dict(zip(dims, scores[k * 6:(k + 1) * 6]))
            reply = "Assessment of the candidate plan.\n```json\n" + json.dumps(verdict) + "\n```"
            f.write(json.dumps({"match": by_id[sid]["question"], "response": reply}) + "\n")

    # Retention: 40 MMLU + 30 ARC + 30 HellaSwag.
    rdir = OUT / "retention"
    rdir.mkdir(exist_ok=True)
    items = []
    for src, count in (("MMLU", 40), ("ARC", 30), ("HellaSwag", 30)):
        for i in range(count):
            items.append({"id": f"{src.lower()}-{i + 1:03d}", "source": src,
                          "question": f"{src} practice question {i + 1}: which option is correct?",
                          "choices": [f"option {c} of {src} {i + 1}" for c in "ABCD"],
                          "answer": "ABCD"[(i * 3) % 4]})
    with open(rdir / "items.jsonl", "w") as f:
        for it in items:
            f.write(json.dumps(it) + "\n")

    def grades(base_n, ft_n, forgotten, learned, seed):
        r = random.Random(seed)
        order = [it["id"] for it in items]
        r.shuffle(order)
        both = base_n - forgotten
        assert both + learned == ft_n
        base = set(order[:base_n])
        ft = set(order[:both]) | set(order[base_n:base_n + learned])
        return base, ft

    models = {"gemma": (84, 67, 21, 4, 1), "qwen": (75, 46, 33, 4, 2)}
    for name, (b, ft_n, fo, le, seed) in models.items():
        base, ft = grades(b, ft_n, fo, le, seed)
        for tag, correct in (("base", base), ("ft", ft)):
            with open(rdir / f"{name}_{tag}.grades.jsonl", "w") as f:
                for it in items:
                    f.write(json.dumps({"item_id": it["id"], "correct": it["id"] in correct}) + "\n")

    # Raw responses for the Gemma pair, graded by a stub judge.
    base, ft = grades(*models["gemma"][:4], models["gemma"][4])
    rules = []
    for tag, correct in (("base", base), ("ft", ft)):
        with open(rdir / f"gemma_{tag}.responses.jsonl", "w") as f:
            for k, it in enumerate(items):
                ok = it["id"] in correct
                letter = it["answer"] if ok else "ABCD"[("ABCD".index(it["answer"]) + 1) % 4]
                text = f"[{tag}:{it['id']}] Considering each option, the answer is {letter}."
                f.write(json.dumps({"item_id": it["id"], "text": text, "generated_tokens": 12 + k % 40}) + "\n")
                rules.append({"match": f"[{tag}:{it['id']}]",
                              "response": json.dumps({"correct": ok})})
    with open(rdir / "mcq_judge.stub.jsonl", "w") as f:
        for r in rules:
            f.write(json.dumps(r) + "\n")


if __name__ == "__main__":
    main()
