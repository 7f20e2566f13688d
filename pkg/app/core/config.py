"""Configuration management"""
import os
import yaml
from pathlib import Path
from typing import Optional, Dict, Any
from dotenv import load_dotenv

# Load environment variables
load_dotenv()


class Config:
    """Application configuration"""

    # Paths
    BASE_DIR: Path = Path(__file__).parent.parent.parent
    APP_CONFIG_PATH: Path = BASE_DIR / "config" / "app_config.yaml"
    SCHEMA_DIR: Path = BASE_DIR / "config"

    # Load app config
    _app_config: Optional[Dict[str, Any]] = None

    # These will be initialized from config file on first access
    _initialized: bool = False

    @classmethod
    def _ensure_initialized(cls):
        """Ensure config is initialized before accessing attributes"""
        if not cls._initialized:
            cls.load_app_config()

    @classmethod
    def _initialize_from_config(cls):
        """Initialize class attributes from config file (called once)"""
        if cls._initialized:
            return

        # Get config dict directly (avoid recursion)
        config = cls._app_config if cls._app_config is not None else {}

        # Worker cap (CUTPOINT_THREADS wins over the config file)
        processing_config = config.get("processing", {})
        cls.MAX_WORKERS = max(1, int(os.getenv("CUTPOINT_THREADS", str(processing_config.get("max_workers", 4)))))

        # Paths from config (env vars take priority)
        paths_config = config.get("paths", {})
        cls.OUTPUT_DIR = Path(os.getenv("CUTPOINT_OUTPUT_DIR", paths_config.get("output_dir", "./results")))

        # Logging
        logging_config = config.get("logging", {})
        cls.LOG_LEVEL = os.getenv("CUTPOINT_LOG_LEVEL", logging_config.get("level", "WARNING")).upper()
        cls.LOG_FORMAT = logging_config.get("format", "%(asctime)s %(levelname)s %(name)s: %(message)s")

        cls._initialized = True

    @classmethod
    def load_app_config(cls) -> Dict[str, Any]:
        """Load application configuration from YAML file"""
        if cls._app_config is not None:
            return cls._app_config

        try:
            if cls.APP_CONFIG_PATH.exists():
                with open(cls.APP_CONFIG_PATH, "r", encoding="utf-8") as f:
                    cls._app_config = yaml.safe_load(f) or {}
            else:
                # Return empty dict if config file doesn't exist
                cls._app_config = {}

            # Initialize class attributes from config (after loading)
            cls._initialize_from_config()
            return cls._app_config
        except (yaml.YAMLError, IOError) as e:
            raise ValueError(f"Failed to load app config from {cls.APP_CONFIG_PATH}: {e}")

    @classmethod
    def reload(cls) -> None:
        """Drop cached settings so the next access re-reads file and environment"""
        cls._app_config = None
        cls._initialized = False
        cls.load_app_config()

    @classmethod
    def get(cls, *keys, default=None):
        """Get nested config value using dot notation

        Args:
            *keys: Variable number of keys to traverse nested config
            default: Default value if key not found

        Example:
            Config.get("engine", "n_max") -> config["engine"]["n_max"]
        """
        config = cls.load_app_config()
        value = config
        for key in keys:
            if isinstance(value, dict):
                value = value.get(key)
                if value is None:
                    return default
            else:
                return default
        return value if value is not None else default

    @classmethod
    def get_float(cls, *keys, default: float) -> float:
        """Nested lookup coerced to float (YAML reads 1e-12 as a string)"""
        return float(cls.get(*keys, default=default))

    @classmethod
    def get_int(cls, *keys, default: int) -> int:
        """Nested lookup coerced to int"""
        return int(float(cls.get(*keys, default=default)))

    @classmethod
    def ensure_directories(cls) -> None:
        """Ensure output directory exists"""
        cls._ensure_initialized()
        cls.OUTPUT_DIR.mkdir(parents=True, exist_ok=True)
