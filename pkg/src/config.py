# src/config.py
from pydantic_settings import BaseSettings, SettingsConfigDict

from src.paths import DATA_DIR, DEFAULT_OUTPUT_DIR


class Settings(BaseSettings):
    # Всё опционально: утилита должна запускаться без .env
    CACHE_DATABASE_URL: str = f"sqlite:///{DATA_DIR / 'gram_cache.db'}"
    CACHE_ENABLED: bool = True
    LOG_LEVEL: str = "INFO"
    DEFAULT_THREADS: int = 1
    OUTPUT_DIR: str = str(DEFAULT_OUTPUT_DIR)

    # .env ищем в корне проекта, откуда запускается `python -m src.main`
    model_config = SettingsConfigDict(
        env_file=".env",
        extra="ignore",
    )


settings = Settings()
