from fastapi import FastAPI
from fastapi.middleware.cors import CORSMiddleware
from controllers.planner_controller import router
from config.settings import settings
from dotenv import load_dotenv
from startup import startup_event
from contextlib import asynccontextmanager

# Load environment variables
load_dotenv()

# Logger setup
import logging
logger = logging.getLogger("backhaul_planner")
logging.basicConfig(level=settings.log_level)


# Lifespan function for app lifecycle management
@asynccontextmanager
async def lifespan(app: FastAPI):
    try:
        logger.info("Starting planner setup...")
        await startup_event(app)
        logger.info("Planner setup completed successfully.")
        yield
    except Exception as e:
        logger.critical(f"Critical error during startup: {e}")
        raise
    finally:
        logger.info("Application shutting down.")


# Initialize FastAPI app with lifespan
app = FastAPI(title="Relayed backhaul planner", lifespan=lifespan)

# CORS configuration
app.add_middleware(
    CORSMiddleware,
    allow_origins=["*"],
    allow_credentials=True,
    allow_methods=["*"],
    allow_headers=["*"],
)

# Include application routes
app.include_router(router)


# Root endpoint
@app.get("/")
def root():
    return {"message": "Relayed backhaul planner is running."}
