use serde_json::{json, Map, Value as Json};

use super::value::{CType, Val};
use super::{EngineError, Game, GameState, Move};

const FORMAT_VERSION: u64 = 1;

impl Game {
    /// `{"v":1,"node":..,"vars":{..}}`; maps appear as
    /// `{"default":..,"entries":{key: value}}` in canonical form.
    pub fn state_json(&self, st: &GameState) -> Json {
        let vars: Map<String, Json> =
            self.vars.iter().zip(&st.vars).map(|(info, v)| (info.name.to_string(), self.val_json(v))).collect();
        json!({ "v": FORMAT_VERSION, "node": self.node_name(st).as_str(), "vars": vars })
    }

    pub fn move_json(&self, m: &Move) -> Json {
        let tags: Vec<&str> = m.0.iter().map(|&t| self.symbol_name(t).as_str()).collect();
        json!({ "v": FORMAT_VERSION, "tags": tags })
    }

    fn val_json(&self, v: &Val) -> Json {
        match v {
            Val::Sym(s) => Json::String(self.symbol_name(*s).to_string()),
            Val::Map(m) => {
                let entries: Map<String, Json> =
                    m.entries.iter().map(|(k, x)| (self.symbol_name(*k).to_string(), self.val_json(x))).collect();
                json!({ "default": self.val_json(&m.default), "entries": entries })
            }
        }
    }

    /// Inverse of `state_json`. Values are checked against their types and
    /// canonicalized.
    pub fn state_from_json(&self, j: &Json) -> Result<GameState, EngineError> {
        let bad = |what: &str| EngineError::BadState(what.to_string());
        if j.get("v").and_then(Json::as_u64) != Some(FORMAT_VERSION) {
            return Err(bad("unsupported format version"));
        }
        let node_name = j.get("node").and_then(Json::as_str).ok_or_else(|| bad("missing node"))?;
        let node = self.nodes.iter().position(|n| n.as_str() == node_name).ok_or_else(|| bad("unknown node"))? as u32;
        let vars_json = j.get("vars").and_then(Json::as_object).ok_or_else(|| bad("missing vars"))?;
        let mut st = self.initial_state();
        st.node = node;
        let mut vars = Vec::with_capacity(self.vars.len());
        for info in &self.vars {
            let v = vars_json
                .get(info.name.as_str())
                .ok_or_else(|| EngineError::BadState(format!("missing variable `{}`", info.name)))?;
            let v = self.json_val(v, &info.ty)?;
            if !info.ty.fits(&v) {
                return Err(EngineError::BadState(format!("variable `{}` does not fit its type", info.name)));
            }
            vars.push(info.ty.canonicalize(&v));
        }
        st.vars = vars;
        st.hash = self.initial_hash(&st.vars);
        Ok(st)
    }

    fn json_val(&self, j: &Json, t: &CType) -> Result<Val, EngineError> {
        let bad = |what: String| EngineError::BadState(what);
        match (j, t) {
            (Json::String(s), CType::Set { .. }) => {
                self.symbol_id(s).map(Val::Sym).ok_or_else(|| bad(format!("unknown symbol `{s}`")))
            }
            (Json::Object(o), CType::Arrow { dest, .. }) => {
                let default = o.get("default").ok_or_else(|| bad("map without default".into()))?;
                let default = self.json_val(default, dest)?;
                let mut entries = Vec::new();
                if let Some(e) = o.get("entries").and_then(Json::as_object) {
                    for (k, x) in e {
                        let k = self.symbol_id(k).ok_or_else(|| bad(format!("unknown key `{k}`")))?;
                        entries.push((k, self.json_val(x, dest)?));
                    }
                }
                entries.sort_by_key(|(k, _)| *k);
                Ok(Val::map(default, entries))
            }
            _ => Err(bad("value does not match its type's shape".into())),
        }
    }
}
