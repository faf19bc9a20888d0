"""Python access to the adaptive tutoring engine.

Documents go in and come out as plain dicts; the extension speaks JSON text.
"""

import json
from pathlib import Path

from . import _adaptutor
from ._adaptutor import EngineError, updated_effectiveness

__all__ = [
    "EngineError",
    "Service",
    "band",
    "grade",
    "infer",
    "load_course_pack",
    "plan_concept",
    "run_experiment",
    "score_questionnaire",
    "select_questions",
    "updated_effectiveness",
]


def _doc(obj):
    # accept a dict, a JSON string, or a path to a JSON file
    if isinstance(obj, Path):
        return obj.read_text()
    if isinstance(obj, str):
        return obj
    return json.dumps(obj)


def band(score):
    return _adaptutor.band(float(score))


def score_questionnaire(instrument, responses):
    return json.loads(_adaptutor.score_questionnaire(_doc(instrument), json.dumps(responses)))


def load_course_pack(pack):
    return json.loads(_adaptutor.load_course_pack(_doc(pack)))


def select_questions(pack, concept, spec, used=(), seed=0):
    return json.loads(_adaptutor.select_questions(_doc(pack), concept, json.dumps(spec), list(used), seed))


def grade(pack, concept, instance, answers, style, hints=None):
    out = _adaptutor.grade(_doc(pack), concept, json.dumps(instance), json.dumps(answers), style,
                           json.dumps(hints or {}))
    return json.loads(out)


def infer(facts, rulebook):
    return json.loads(_adaptutor.infer(json.dumps(facts), _doc(rulebook)))


def plan_concept(model, pack, concept, rulebook):
    return json.loads(_adaptutor.plan_concept(json.dumps(model), _doc(pack), concept, _doc(rulebook)))


def run_experiment(pack, rules, instrument, **options):
    return json.loads(_adaptutor.run_experiment(_doc(pack), _doc(rules), _doc(instrument), json.dumps(options)))


class Service:
    """In-process API; handle() takes the same requests as the HTTP server."""

    def __init__(self, pack, rules, instrument, records, seed=0, teacher_token=""):
        self._svc = _adaptutor.Service(str(pack), str(rules), str(instrument), str(records), seed, teacher_token)

    def handle(self, method, path, body=None, headers=None):
        text = "" if body is None else json.dumps(body)
        status, out = self._svc.handle(method, path, text, dict(headers or {}))
        return status, json.loads(out)
