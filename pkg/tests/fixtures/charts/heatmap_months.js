// Month-by-attribute heatmap over locally aggregated values.
const margin = { top: 24, right: 16, bottom: 40, left: 72 };
const w = vw - margin.left - margin.right;
const h = vh - margin.top - margin.bottom;
const g = svg.append("g").attr("transform", `translate(${margin.left},${margin.top})`);

const months = Array.from(new Set(data.map(d => d.month)));
const metrics = Array.from(new Set(data.map(d => d.metric)));

const xScale = d3.scaleBand().domain(months).range([0, w]).padding(0.05);
const yScale = d3.scaleBand().domain(metrics).range([0, h]).padding(0.05);
const shade = d3.scaleSequential(d3.interpolateBlues)
  .domain([0, d3.max(data, d => d.value)]);

g.append("g").attr("transform", `translate(0,${h})`).call(d3.axisBottom(xScale));
g.append("g").call(d3.axisLeft(yScale));

g.selectAll("rect")
  .data(data)
  .enter()
  .append("rect")
  .attr("x", d => xScale(d.month))
  .attr("y", d => yScale(d.metric))
  .attr("width", xScale.bandwidth())
  .attr("height", yScale.bandwidth())
  .attr("fill", d => shade(d.value));

return [xScale, yScale];
