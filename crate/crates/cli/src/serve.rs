//! HTTP front end over [`Api`] plus a periodic scheduler tick.

use std::net::SocketAddr;
use std::sync::Arc;
use std::time::Duration;

use axum::body::Bytes;
use axum::http::{header, Method, StatusCode, Uri};
use axum::response::{IntoResponse, Response};
use axum::Router;
use forget_core::lifecycle::{Api, Service};

/// Every request is forwarded to [`Api::handle`].
pub fn router(api: Arc<Api>) -> Router {
    Router::new().fallback(move |method: Method, uri: Uri, body: Bytes| {
        let api = api.clone();
        async move {
            let target = uri
                .path_and_query()
                .map_or(uri.path().to_string(), |p| p.as_str().to_string());
            let res =
                tokio::task::spawn_blocking(move || api.handle(method.as_str(), &target, &body))
                    .await;
            match res {
                Ok(r) => Response::builder()
                    .status(
                        StatusCode::from_u16(r.status).unwrap_or(StatusCode::INTERNAL_SERVER_ERROR),
                    )
                    .header(header::CONTENT_TYPE, "application/json")
                    .body(axum::body::Body::from(r.body.to_string()))
                    .unwrap_or_else(|_| StatusCode::INTERNAL_SERVER_ERROR.into_response()),
                Err(_) => StatusCode::INTERNAL_SERVER_ERROR.into_response(),
            }
        }
    })
}

/// Serves until ctrl-c. `tick` of zero disables the scheduler.
pub async fn serve(svc: Arc<Service>, addr: SocketAddr, tick: Duration) -> anyhow::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    eprintln!("listening on http://{}", listener.local_addr()?);
    if !tick.is_zero() {
        let s = svc.clone();
        tokio::spawn(async move {
            let mut every = tokio::time::interval(tick);
            loop {
                every.tick().await;
                let s = s.clone();
                match tokio::task::spawn_blocking(move || s.tick()).await {
                    Ok(Err(e)) => eprintln!("tick failed: {e}"),
                    Err(e) => eprintln!("tick panicked: {e}"),
                    Ok(Ok(_)) => {}
                }
            }
        });
    }
    let app = router(Arc::new(Api::new(svc)));
    axum::serve(listener, app)
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await?;
    Ok(())
}
