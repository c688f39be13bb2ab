"""WebSocket transport for the synchronization protocol.

One JSON document per message over /ws; the protocol itself lives in
service.handle_message. Sessions are handled on a single event loop, so
per-chart action application is naturally serialized. A static editor UI
directory can be mounted at the web root.
"""

from __future__ import annotations

import uuid
from pathlib import Path
from typing import Optional

from fastapi import FastAPI, WebSocket, WebSocketDisconnect
from fastapi.responses import JSONResponse, PlainTextResponse
from fastapi.staticfiles import StaticFiles

from .service import ServerState, handle_message


def create_app(state: ServerState, ui_dir: Optional[Path] = None) -> FastAPI:
    app = FastAPI(title="pchart server")
    sockets: dict[str, WebSocket] = {}

    @app.get("/charts")
    def charts() -> JSONResponse:
        return JSONResponse(sorted(state.charts))

    @app.websocket("/ws")
    async def ws(websocket: WebSocket):
        await websocket.accept()
        session_id = uuid.uuid4().hex
        sockets[session_id] = websocket
        try:
            while True:
                message = await websocket.receive_json()
                for target, reply in handle_message(state, session_id, message):
                    target_ws = sockets.get(target)
                    if target_ws is not None:
                        await target_ws.send_json(reply)
        except WebSocketDisconnect:
            pass
        finally:
            sockets.pop(session_id, None)
            state.sessions.pop(session_id, None)

    if ui_dir is not None and Path(ui_dir).is_dir():
        app.mount("/", StaticFiles(directory=str(ui_dir), html=True), name="ui")
    else:
        @app.get("/")
        def index() -> PlainTextResponse:
            names = ", ".join(sorted(state.charts)) or "none"
            return PlainTextResponse(
                "pchart server\n"
                f"charts: {names}\n"
                "connect a client to /ws (JSON protocol) or serve with --ui DIR\n"
            )

    return app


def run_server(directory: Path, port: int, ui_dir: Optional[Path] = None):
    import uvicorn

    state = ServerState.from_directory(directory)
    app = create_app(state, ui_dir)
    uvicorn.run(app, host="127.0.0.1", port=port, log_level="warning")
