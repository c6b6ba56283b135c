#!/usr/bin/env python3
# Copyright 2026 The SDoH Workbench Authors.
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.
"""Regenerates the synthetic 50-note demo corpus under data/demo.

Every note, label and code here is invented. Gold labels are keyed by the
sentence ids the built segmenter produces, so the script runs the `sdoh`
binary; the response cache is recorded against `sdoh-stub-server`.

    python3 scripts/make_demo.py --build build
"""

import argparse
import csv
import json
import random
import shutil
import subprocess
import sys
import tempfile
import time
from pathlib import Path

ROOT = Path(__file__).resolve().parent.parent
DEMO = ROOT / "data" / "demo"
SEED = 20231

CLINICAL = [
    "Patient completed week three of radiation therapy to the left breast.",
    "Reports mild fatigue that improves with rest.",
    "Skin in the treatment field shows grade one erythema.",
    "Denies fever, chills or night sweats.",
    "Appetite is stable and weight is unchanged since the last visit.",
    "Pain is controlled with acetaminophen as needed.",
    "No new neurologic symptoms were reported today.",
    "Mucositis remains grade one and oral intake is adequate.",
    "Blood counts from this morning are within normal limits.",
    "Continue daily radiation as planned through the final fraction.",
    "Apply moisturizing cream to the treatment field twice daily.",
    "Follow up in clinic after completion of treatment.",
    "Discussed expected side effects of chemoradiation in detail.",
    "The imaging from last month showed a stable mass.",
    "Patient tolerated the simulation without difficulty.",
    "Swallowing is slightly painful but manageable with liquids.",
    "Nausea resolved after switching to ondansetron.",
    "Vital signs were reviewed and are unremarkable.",
    "Lungs are clear to auscultation bilaterally.",
    "Abdomen is soft and nontender without masses.",
    "Plan to repeat laboratory studies next week.",
    "Referral placed to nutrition for dietary counseling.",
    "Will coordinate with medical oncology regarding systemic therapy.",
    "Questions were answered and consent was signed.",
    "Patient verbalized understanding of the treatment plan.",
    "Reviewed pathology showing invasive ductal carcinoma.",
    "Performance status is good and daily activities are preserved.",
    "There is mild edema of the right lower extremity.",
    "Hydration was encouraged given the recent diarrhea.",
    "The port site is clean without signs of infection.",
]

# (sentence, gold CATEGORY_attribute labels). Some phrasings deliberately fall
# outside the starter lexicon, and some lexicon hits are not SDoH.
SDOH = [
    ("She lives with her husband and two children.", ["RELATIONSHIP_married", "PARENT_child_under_18", "SUPPORT_plus"]),
    ("He is married and works as an electrician.", ["RELATIONSHIP_married", "EMPLOYMENT_employed"]),
    ("Patient is retired from the postal service.", ["EMPLOYMENT_retired"]),
    ("He lost his job in March and has no income.", ["EMPLOYMENT_unemployed", "HOUSING_financial_status"]),
    ("She lives alone in an apartment downtown.", ["SUPPORT_minus"]),
    ("Patient is widowed and has limited support at home.", ["RELATIONSHIP_widowed", "SUPPORT_minus"]),
    ("He has been staying at a homeless shelter since January.", ["HOUSING_undomiciled"]),
    ("She cannot afford rent after her hours were cut.", ["HOUSING_financial_status", "EMPLOYMENT_underemployed"]),
    ("Patient needs a ride to daily treatments because she has no car.", ["TRANSPORTATION_resource"]),
    ("He lives two hours away and the drive is difficult.", ["TRANSPORTATION_distance"]),
    ("She is divorced and shares custody of her teenage son.", ["RELATIONSHIP_divorced", "PARENT_child_under_18"]),
    ("Patient has a supportive sister who attends every visit.", ["SUPPORT_plus"]),
    ("He is on disability after a back injury.", ["EMPLOYMENT_disability"]),
    ("She is a full-time student at the community college.", ["EMPLOYMENT_student"]),
    ("Her partner helps with meals and medications.", ["RELATIONSHIP_partnered", "SUPPORT_plus"]),
    ("Patient is single and has no one to help after surgery.", ["RELATIONSHIP_single", "SUPPORT_minus"]),
    ("He was let go from the warehouse last fall.", ["EMPLOYMENT_unemployed"]),
    ("She sleeps in her car most nights.", ["HOUSING_undomiciled"]),
    ("Patient relies on a neighbor for groceries.", ["SUPPORT_plus"]),
    ("Her daughter is eight years old and in second grade.", ["PARENT_child_under_18"]),
    ("He takes the bus to clinic which takes ninety minutes each way.", ["TRANSPORTATION_resource", "TRANSPORTATION_distance"]),
    ("She is worried about paying the mortgage this month.", ["HOUSING_financial_status"]),
    ("Patient and his wife recently separated.", ["RELATIONSHIP_divorced"]),
    ("He is socially isolated since moving to the area.", ["SUPPORT_minus"]),
    ("She works part time at a grocery store and wants more hours.", ["EMPLOYMENT_underemployed"]),
    ("His fiance drives him to each appointment.", ["RELATIONSHIP_partnered", "SUPPORT_plus"]),
    ("Patient has three kids at home under the age of ten.", ["PARENT_child_under_18"]),
    ("She was evicted last month and is staying with friends.", ["HOUSING_undomiciled"]),
    ("He has trouble finding transportation on weekends.", ["TRANSPORTATION_resource"]),
    ("Patient's husband passed away last year.", ["RELATIONSHIP_widowed"]),
    # lexicon hits that carry no SDoH label
    ("Family history is notable for colon cancer in her mother.", []),
    ("Her adult children live out of state.", []),
    ("Transportation of the specimen to pathology was delayed.", []),
]

ROLES_KEPT = ["physician"] * 6 + ["physician_assistant", "nurse_practitioner"]
RACES = [("Asian", "Not Hispanic"), ("Black", "Not Hispanic"), ("White", "Not Hispanic"), ("White", "Hispanic")]


def words(n_sentences, rng):
    return [rng.choice(CLINICAL) for _ in range(n_sentences)]


def unique(sentences):
    seen, out = set(), []
    for s in sentences:
        if s not in seen:
            seen.add(s)
            out.append(s)
    return out


def physician_note(rng, sdoh, hpi=12):
    parts = ["Chief Complaint:", "Follow up during radiation therapy.", "",
             "History of Present Illness:", " ".join(unique(words(hpi, rng))), ""]
    parts += ["Social History:", " ".join(sdoh) if sdoh else "No changes in social situation were reported.", ""]
    plan = unique(words(10, rng))
    parts += ["Assessment and Plan:", " ".join(plan[:3])]
    parts += ["• " + s for s in plan[3:]]
    return "\n".join(parts) + "\n"


def long_section_note(rng, header, sdoh, n=75):
    body = " ".join(words(n, rng))
    return f"{header}:\n{' '.join(sdoh)} {body}\n\nAssessment:\n" + " ".join(unique(words(3, rng))) + "\n"


def build_notes(rng):
    patients = [f"P{i:03d}" for i in range(1, 31)]
    demo = {}
    for i, p in enumerate(patients):
        race, eth = RACES[i % len(RACES)]
        demo[p] = {"gender": "female" if i % 2 == 0 else "male", "race": race, "ethnicity": eth}
    notes = []
    pool = list(range(len(SDOH)))

    def sdoh_sentences(k):
        return [SDOH[i][0] for i in rng.sample(pool, k)]

    def add(pid, role, text):
        idx = len(notes) + 1
        notes.append({"note_id": f"N{idx:03d}", "patient_id": pid, "author_role": role,
                      "date": f"2023-{(idx % 12) + 1:02d}-{(idx % 27) + 1:02d}", "text": text,
                      "demographics": demo[pid]})

    # 40 notes meant to pass the inclusion rules
    for i in range(40):
        pid = patients[i % 30]
        k = rng.choice([0, 1, 2, 2, 3])
        add(pid, rng.choice(ROLES_KEPT), physician_note(rng, sdoh_sentences(k)))
    # social worker note with a section over the cap (exempt)
    add(patients[3], "social_worker", long_section_note(rng, "Social History", sdoh_sentences(3)))
    add(patients[8], "social_worker", long_section_note(rng, "Social History", sdoh_sentences(2), n=20))
    # rejected: too short
    for pid in (patients[5], patients[12], patients[20]):
        add(pid, "physician", "Chief Complaint:\nFollow up.\n\nAssessment and Plan:\n" + " ".join(words(3, rng)) + "\n")
    # rejected: physician note with none of the required sections
    for pid in (patients[7], patients[15]):
        add(pid, "physician", "Chief Complaint:\nFollow up during radiation therapy.\n\nPhysical Exam:\n"
            + " ".join(unique(words(14, rng))) + "\n\nMedications:\n" + " ".join(unique(words(10, rng))) + "\n")
    # rejected: registered nurse note with an over-long section
    add(patients[10], "registered_nurse", long_section_note(rng, "History of Present Illness", sdoh_sentences(1)))
    # nurse notes without required sections are accepted
    add(patients[22], "registered_nurse", "Interval History:\n" + " ".join(sdoh_sentences(2) + words(28, rng)) + "\n")
    add(patients[27], "registered_nurse", "Interval History:\n" + " ".join(sdoh_sentences(1) + words(28, rng)) + "\n")
    assert len(notes) == 50, len(notes)
    return notes


SYNTH = {
    ("HOUSING", True): ["is living in a shelter after losing her apartment", "sleeps in his truck behind the store",
                        "was evicted and is couch surfing with relatives", "cannot afford rent this month",
                        "is behind on the mortgage and fears foreclosure", "has no permanent mailing address",
                        "lives in a motel week to week", "is homeless and stays at the mission",
                        "faces a rent increase she cannot cover", "was displaced by a house fire"],
    ("TRANSPORTATION", True): ["has no car and misses appointments", "needs a ride to radiation every day",
                               "lives ninety miles away from the cancer center", "depends on the bus which runs twice a day",
                               "cannot drive while on pain medication", "has an hour drive each way to clinic",
                               "relies on volunteer drivers for treatment", "could not get transportation to the infusion",
                               "has a broken car and no money to fix it", "lives far from any public transit"],
    ("RELATIONSHIP", True): ["is recently divorced", "is a widow since last spring", "is single and lives by herself",
                             "separated from her husband in June", "is going through a painful divorce",
                             "lost her husband to cancer last year", "is single and never married",
                             "and his ex-wife do not speak", "is a widower with no family nearby", "is separated and living apart"],
    ("RELATIONSHIP", False): ["is married with a supportive wife", "lives with her boyfriend of ten years",
                              "has been married for thirty years", "and her husband manage the farm together",
                              "is engaged to his fiance", "lives with his partner in the city",
                              "brought her husband to the consult", "has a girlfriend who helps at home",
                              "is happily married", "and his wife recently celebrated an anniversary"],
    ("PARENT", True): ["has two children under ten at home", "is raising a toddler alone", "has a teenage daughter",
                       "needs childcare during treatment", "is the mother of three young kids",
                       "worries about her kids while in the hospital", "has a newborn son",
                       "has twin boys in elementary school", "is a father of two young children",
                       "arranges childcare with her sister"],
    ("EMPLOYMENT", True): ["lost his job last month", "is unemployed and looking for work", "was laid off from the factory",
                           "is on disability benefits", "is unable to work during radiation",
                           "has been unemployed since the diagnosis", "works fewer hours than she needs",
                           "lost her job after missing shifts", "is underemployed as a part-time cashier",
                           "was let go from the restaurant"],
    ("EMPLOYMENT", False): ["works as a teacher", "is employed as a nurse", "is retired from the navy",
                            "works as a software engineer", "is a full-time student", "is a retiree who volunteers",
                            "is employed at the bank", "works as a carpenter", "is working as a bus driver",
                            "retired from teaching in 2019"],
    ("SUPPORT", True): ["lives alone with no family support", "has no one to help with meals",
                        "is socially isolated", "has limited support at home", "has no one to watch the dog",
                        "reports a lack of support from family", "lives by himself far from relatives",
                        "has nobody to call in an emergency", "has no friends nearby", "lives alone after the move"],
    ("SUPPORT", False): ["has a supportive family", "lives with her sister who helps daily",
                         "is accompanied by his son at visits", "has a caregiver every afternoon",
                         "gets support from her church", "has a supportive neighbor",
                         "lives with his daughter", "has strong support from friends",
                         "is accompanied by her mother", "has a caregiver who manages medications"],
}

PARAPHRASE = {
    "lives alone": "resides on their own", "lost his job": "was dismissed", "lost her job": "was dismissed",
    "homeless": "without a home", "married": "wed", "children": "little ones", "kids": "little ones",
    "unemployed": "out of work", "has no car": "does not own a vehicle", "divorced": "no longer with a spouse",
    "supportive": "caring", "caregiver": "home aide", "childcare": "someone to mind the baby",
}


def build_synthetic(rng):
    items = []
    for (cat, adverse), phrases in SYNTH.items():
        batch = f"r1-{cat}-{'adverse' if adverse else 'not_adverse'}"
        for k, phrase in enumerate(phrases):
            subject = ["Patient", "Patient", "He", "She"][k % 4]
            item = {"id": f"{batch}-{k + 1:03d}", "text": f"{subject} {phrase}.", "category": cat,
                    "adverse": adverse, "round": 1, "batch_id": batch, "validated": "confirmed"}
            if k == 9:
                item["validated"] = "discarded"
            elif k == 8 and cat == "SUPPORT" and adverse:
                item["validated"] = "corrected"
                item["corrected_labels"] = ["SUPPORT_minus", "RELATIONSHIP_single"]
            items.append(item)
    return items


def inject(text, race, gender, rng):
    person = f"{race} {'woman' if gender == 'female' else 'man'}"
    for subj in ("Patient ", "He ", "She "):
        if text.startswith(subj):
            body = text[len(subj):]
            break
    else:
        body = text
    if gender == "female":
        body = body.replace(" his ", " her ").replace(" himself", " herself").replace("widower", "widow")
    else:
        body = body.replace(" her ", " his ").replace(" herself", " himself")
    if rng.random() < 0.18:
        for k, v in PARAPHRASE.items():
            if k in body:
                body = body.replace(k, v, 1)
                break
    return f"{person} {body}"


def build_pairs(synthetic, rng):
    combos = [(r, g) for g in ("female", "male") for r in ("Asian", "Black", "White", "Hispanic")]
    pairs = []
    kept = [s for s in synthetic if s["validated"] in ("confirmed", "corrected")]
    for i, s in enumerate(kept):
        race, gender = combos[i % len(combos)]
        pairs.append({"pair_id": f"pair-{i + 1:04d}", "original_id": s["id"],
                      "injected_text": inject(s["text"], race, gender, rng), "race_ethnicity": race,
                      "gender": gender, "validated": "discarded" if i % 23 == 22 else "confirmed"})
    return pairs


def write_jsonl(path, rows):
    with open(path, "w", encoding="utf-8") as f:
        for r in rows:
            f.write(json.dumps(r, sort_keys=True, ensure_ascii=False) + "\n")


def run(cmd):
    subprocess.run(cmd, check=True, stdout=subprocess.DEVNULL)


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--build", default=str(ROOT / "build"), help="CMake build directory")
    args = ap.parse_args()
    sdoh = Path(args.build) / "tools" / "sdoh"
    stub = Path(args.build) / "tools" / "sdoh-stub-server"
    rng = random.Random(SEED)
    DEMO.mkdir(parents=True, exist_ok=True)

    notes = build_notes(rng)
    write_jsonl(DEMO / "notes.jsonl", notes)

    work = Path(tempfile.mkdtemp(prefix="sdoh-demo-"))
    try:
        run([str(sdoh), "filter", "--notes", str(DEMO / "notes.jsonl"), "--out", str(work / "filter")])
        run([str(sdoh), "segment", "--notes", str(work / "filter" / "notes.jsonl"), "--out", str(work / "segment")])
        labels = {text: lab for text, lab in SDOH}
        clinical = set(CLINICAL) | {"Follow up during radiation therapy.", "Follow up.",
                                    "No changes in social situation were reported."}
        gold, coder_b = [], []
        brng = random.Random(SEED + 1)
        for line in open(work / "segment" / "sentences.jsonl", encoding="utf-8"):
            s = json.loads(line)
            text = s["text"]
            if text in labels:
                lab = labels[text]
            elif text in clinical:
                lab = []
            else:
                sys.exit(f"unexpected sentence from the segmenter: {text!r}")
            gold.append({"sentence_id": s["sentence_id"], "labels": lab})
            other = list(lab)
            if lab and brng.random() < 0.08:
                other = other[:-1]
            elif not lab and brng.random() < 0.01:
                other = ["SUPPORT_plus"]
            coder_b.append({"sentence_id": s["sentence_id"], "labels": other})
        write_jsonl(DEMO / "gold.jsonl", gold)
        write_jsonl(DEMO / "gold_coder_b.jsonl", coder_b)

        kept_patients = {}
        for line in open(work / "filter" / "notes.jsonl", encoding="utf-8"):
            n = json.loads(line)
            kept_patients.setdefault(n["patient_id"], n["date"])
        adverse = {}
        note_patient = {n["note_id"]: n["patient_id"] for n in notes}
        for g in gold:
            pid = note_patient[g["sentence_id"].rsplit(":", 1)[0]]
            for lab in g["labels"]:
                cat, attr = lab.split("_", 1)
                if attr not in ("employed", "retired", "student", "married", "partnered", "plus"):
                    adverse.setdefault(pid, set()).add(cat)
        code_for = {"EMPLOYMENT": "Z56.0", "HOUSING": "Z59.0", "SUPPORT": "Z60.2", "PARENT": "Z62.898",
                    "TRANSPORTATION": "Z75.3"}
        zrng = random.Random(SEED + 2)
        zrows = []
        for pid in sorted(kept_patients):
            for cat in sorted(adverse.get(pid, ())):
                if cat in code_for and zrng.random() < 0.4:
                    zrows.append((pid, code_for[cat], kept_patients[pid]))
        no_adverse = [p for p in sorted(kept_patients) if p not in adverse]
        for pid in no_adverse[:2]:
            zrows.append((pid, "Z63.0", kept_patients[pid]))
        first = sorted(kept_patients)[0]
        zrows.append((first, "Z91.81", kept_patients[first]))
        zrows.append((first, "Z55.0", kept_patients[first]))
        with open(DEMO / "zcodes.csv", "w", newline="", encoding="utf-8") as f:
            w = csv.writer(f, lineterminator="\n")
            w.writerow(["patient_id", "code", "date"])
            w.writerows(zrows)

        synthetic = build_synthetic(rng)
        write_jsonl(DEMO / "synthetic.jsonl", synthetic)
        write_jsonl(DEMO / "demo_pairs.jsonl", build_pairs(synthetic, rng))

        cache = DEMO / "response_cache.jsonl"
        if cache.exists():
            cache.unlink()
        proc = subprocess.Popen([str(stub), "--mode", "demo", "--lexicon", str(DEMO / "stub_lexicon.csv")],
                                stdout=subprocess.PIPE, text=True)
        try:
            base = proc.stdout.readline().strip()
            remote = ["--base-url", base, "--model", "stub-gpt", "--cache", str(cache)]
            run([str(sdoh), "classify", "--backend", "remote", "--task", "both", "--sentences",
                 str(work / "segment" / "sentences.jsonl"), "--out", str(work / "classify")] + remote)
            run([str(sdoh), "bias-eval", "--task", "both", "--pairs", str(DEMO / "demo_pairs.jsonl"), "--synthetic",
                 str(DEMO / "synthetic.jsonl"), "--model-spec", "lexicon=lexicon", "--model-spec", "stub-gpt=remote",
                 "--out", str(work / "bias")] + remote)
        finally:
            proc.terminate()
            proc.wait(timeout=10)
        time.sleep(0)
    finally:
        shutil.rmtree(work, ignore_errors=True)
    print(f"demo corpus written to {DEMO}")


if __name__ == "__main__":
    main()
