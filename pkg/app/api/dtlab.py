"""
#   © 2024 EurekAILab. All rights reserved.
#   No part of this publication may be reproduced, distributed,
#   or transmitted in any form or by any means, including photocopying, recording,
#   or other electronic or mechanical methods, without the prior written permission of the publisher,
#   except in the case of brief quotations embodied in critical reviews and certain other noncommercial uses permitted by copyright law.
"""

import logging
from typing import Any, Dict

from fastapi import APIRouter, HTTPException
from fastapi.concurrency import run_in_threadpool

from app.causal.errors import (
    CycleError,
    DtlabError,
    NoAcceptedEpisodesError,
    ProblemDefinitionError,
    RuleSpaceTooLargeError,
    StateSpaceTooLargeError,
    UndefinedVerdictError,
    UnsupportedEvidenceError,
)
from app.decision.problems import BUILTINS, DecisionProblem
from app.decision.reports import check_problem_text, explain, simulate
from app.decision.theories import behaviour_matrix, evaluate
from app.dsl.parser import parse_problem
from app.models.api import (
    CheckRequest,
    EvaluateRequest,
    ExplainRequest,
    ProblemSource,
    SimulateRequest,
    TableRequest,
)
from app.utils.conversion import to_payload
from app.utils.tools import load_problem, load_problems, parse_query, parse_theories, parse_theory

router = APIRouter()

# Failures of a well-formed request on a problem the engine cannot answer
_UNPROCESSABLE = (
    CycleError,
    StateSpaceTooLargeError,
    RuleSpaceTooLargeError,
    UnsupportedEvidenceError,
    UndefinedVerdictError,
    NoAcceptedEpisodesError,
)


def _http_error(e: DtlabError) -> HTTPException:
    if isinstance(e, ProblemDefinitionError):
        detail: Any = [str(d) for d in e.diagnostics]
    else:
        detail = str(e)
    status = 422 if isinstance(e, _UNPROCESSABLE) else 400
    logging.error(f"dtlab request failed ({status}): {e}")
    return HTTPException(status_code=status, detail=detail)


def _problem(source: ProblemSource) -> DecisionProblem:
    if source.problem_text is not None:
        return parse_problem(source.problem_text)
    if source.problem is None:
        raise HTTPException(status_code=400, detail="either 'problem' or 'problem_text' is required")
    return load_problem(source.problem, source.params)


@router.get("/builtins")
async def list_builtins() -> Dict[str, Any]:
    return {"builtins": sorted(BUILTINS)}


@router.post("/evaluate")
async def evaluate_theory(request: EvaluateRequest) -> Dict[str, Any]:
    try:
        problem = _problem(request)
        verdict = await run_in_threadpool(evaluate, problem, parse_theory(request.theory), request.obs)
    except DtlabError as e:
        raise _http_error(e)
    return to_payload(verdict)


@router.post("/table")
async def behaviour_table(request: TableRequest) -> Dict[str, Any]:
    try:
        problems = load_problems(",".join(request.problems), request.params)
        theories = parse_theories(",".join(request.theories))
        matrix = await run_in_threadpool(behaviour_matrix, problems, theories)
    except DtlabError as e:
        raise _http_error(e)
    return to_payload(matrix)


@router.post("/check")
async def check_problem(request: CheckRequest) -> Dict[str, Any]:
    report = await run_in_threadpool(check_problem_text, request.problem_text)
    return to_payload(report)


@router.post("/simulate")
async def simulate_problem(request: SimulateRequest) -> Dict[str, Any]:
    try:
        problem = _problem(request)
        theory = parse_theory(request.theory) if request.theory else None
        reports = await run_in_threadpool(
            simulate, problem, theory, request.rule, request.obs, request.episodes, request.seed
        )
    except DtlabError as e:
        raise _http_error(e)
    return to_payload(reports)


@router.post("/explain")
async def explain_query(request: ExplainRequest) -> Dict[str, Any]:
    try:
        problem = _problem(request)
        x, y, z = parse_query(request.query)
        if request.graph not in ("physical", "logical"):
            raise HTTPException(status_code=400, detail=f"unknown graph {request.graph!r}")
        explanation = explain(problem, x, y, z, request.graph)
    except DtlabError as e:
        raise _http_error(e)
    return to_payload(explanation)
