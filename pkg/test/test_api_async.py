"""
Concurrent requests against the dtlab endpoints.

Heavy work runs in the thread pool, so mixed requests sent together must
come back with the same answers as when sent one after another.
"""

import asyncio

import httpx
import pytest

from main import app

API_URL = "/api/v1/dtlab"

REQUESTS = [
    ("evaluate", {"problem": "builtin:newcomb", "theory": "edt"}),
    ("evaluate", {"problem": "builtin:transparent_newcomb", "theory": "fdt", "obs": {"P": "full"}}),
    ("table", {"problems": ["twin_pd"]}),
    ("simulate", {"problem": "builtin:twin_pd", "theory": "cdt", "episodes": 1_000, "seed": 7}),
    ("explain", {"problem": "builtin:newcomb", "query": "Dt _||_ U | D"}),
]


async def _post(client: httpx.AsyncClient, endpoint: str, body: dict):
    response = await client.post(f"{API_URL}/{endpoint}", json=body)
    return response.status_code, response.json()


@pytest.mark.anyio
async def test_mixed_concurrent_requests():
    """Send every request four times at once and compare with sequential answers."""
    transport = httpx.ASGITransport(app=app)
    async with httpx.AsyncClient(transport=transport, base_url="http://test") as client:
        sequential = [await _post(client, endpoint, body) for endpoint, body in REQUESTS]
        tasks = [_post(client, endpoint, body) for _ in range(4) for endpoint, body in REQUESTS]
        concurrent = await asyncio.gather(*tasks)

    assert all(status == 200 for status, _ in sequential)
    for i, result in enumerate(concurrent):
        assert result == sequential[i % len(REQUESTS)]
