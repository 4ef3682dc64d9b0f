"""HTTP layer: pydantic schemas (movefem.service.schemas) and the FastAPI
application (movefem.service.app.app)."""
