# main.py

import logging
import uvicorn
from fastapi import FastAPI
from fastapi.middleware.cors import CORSMiddleware

from app.config import config
# Import the master router from router.py
from router.router import api_router

logging.basicConfig(level=config.get_logging_level(), format=config.get_logging_format())

server = config.get_server_config()

app = FastAPI(
    title='dtlab',
    description="Evaluate decision theories on mechanised causal graphs: "
                "EU tables, behaviour tables, problem checks, simulation and d-separation",
    version='1.0.0',
    docs_url='/docs',
    redoc_url='/redoc'
)
app.include_router(api_router, prefix='/api/v1')

app.add_middleware(
    CORSMiddleware,
    allow_origins=list(server["cors_origins"]),
    allow_credentials=True,
    allow_methods=["GET", "POST"],
    allow_headers=["*"],
)


@app.get("/")
async def root():
    return "dtlab: decision theories on mechanised causal graphs"


if __name__ == "__main__":
    logging.info(f"dtlab serving on {server['host']}:{server['port']}")
    uvicorn.run(app, host=server["host"], port=int(server["port"]))
